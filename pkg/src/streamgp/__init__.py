"""Streaming sparse Gaussian-process regression.

Online variational and Power-EP updates over pseudo-points, with exact-GP and
batch sparse-GP references and a small streaming experiment harness.
"""
from .base import DataBatch, PredictiveMarginals
from .errors import ConditioningError, ContractError, InvalidMessageError
from . import batch_sgp, exact_gp
from .kernel import Hyperparams, kernel_diag, kernel_matrix
from .linalg import DEFAULT_JITTER, get_jitter, jitter_scope, set_jitter
from .optimizer import OptimConfig, init_pseudo_inputs, optimize_batch
from .streaming_pep import PepConfig, pep_energy, pep_update
from .streaming_vfe import EnergyBreakdown, SparsePosterior, predict, vfe_energy, vfe_update

__version__ = "0.1.0"

__all__ = [
    "DataBatch",
    "PredictiveMarginals",
    "ConditioningError",
    "ContractError",
    "InvalidMessageError",
    "Hyperparams",
    "kernel_matrix",
    "kernel_diag",
    "DEFAULT_JITTER",
    "get_jitter",
    "set_jitter",
    "jitter_scope",
    "OptimConfig",
    "optimize_batch",
    "init_pseudo_inputs",
    "PepConfig",
    "pep_update",
    "pep_energy",
    "SparsePosterior",
    "EnergyBreakdown",
    "vfe_update",
    "vfe_energy",
    "predict",
]
