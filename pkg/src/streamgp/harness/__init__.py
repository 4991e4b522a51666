"""Experiment harness: CSV ingestion, synthetic streams, baselines and the CLI."""
from .data import AffineTransform, interleave_split, load_csv, scale_inputs, synth_gp_stream, write_csv
from .metrics import metrics
from .runner import METHODS, IterationRecord, ModelParams, StreamPlan, run_stream

__all__ = [
    "AffineTransform",
    "interleave_split",
    "load_csv",
    "scale_inputs",
    "synth_gp_stream",
    "write_csv",
    "metrics",
    "METHODS",
    "IterationRecord",
    "ModelParams",
    "StreamPlan",
    "run_stream",
]
