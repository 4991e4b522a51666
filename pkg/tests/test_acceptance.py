"""The nine acceptance criteria, each reported as one PASS/FAIL line.

Run under pytest (the lines are echoed in the terminal summary) or directly
with ``python tests/test_acceptance.py``.
"""
import csv
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from streamgp import DataBatch, Hyperparams, OptimConfig, PepConfig, SparsePosterior
from streamgp import init_pseudo_inputs, optimize_batch, pep_energy, vfe_energy, vfe_update
from streamgp.harness import ModelParams, StreamPlan, run_stream, synth_gp_stream
from streamgp.harness import equivalence

sys.path.insert(0, str(Path(__file__).parent))
import oracles  # noqa: E402
import test_fixtures  # noqa: E402

REPORT = []


def report(num, name, passed, detail, seconds, limit):
    ok = passed and seconds < limit
    REPORT.append(f"{'PASS' if ok else 'FAIL'}  [{num}] {name}: {detail} ({seconds:.1f}s, limit {limit:.0f}s)")
    return ok


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _from_check(num, check, limit):
    res, secs = timed(check)
    assert report(num, res.name, res.passed, f"max error {res.error:.2e} (tol {res.tol:.0e})", secs, limit), REPORT[-1]


def test_1_batch_equivalence():
    _from_check(1, equivalence.batch_equivalence, 5)


def test_2_exact_recovery():
    _from_check(2, equivalence.exact_recovery, 5)


def test_3_alpha_limit():
    _from_check(3, equivalence.alpha_limit, 10)


def test_4_pep_single_pass():
    _from_check(4, equivalence.pep_single_pass, 5)


def _track(seed):
    theta_true = Hyperparams.from_values([0.8], 1.0, 0.1)
    X, y = synth_gp_stream(1, 1500, theta_true, seed)
    ml_log_ls = oracles.exact_ml_fit(X, y, restarts=())[0]
    theta = Hyperparams.from_values([1.0], 1.0, 0.1)
    post = SparsePosterior.empty(1)
    cfg = OptimConfig(max_iters=30)
    for idx in np.array_split(np.arange(1500), 10):
        b = DataBatch(X[idx], y[idx])
        Z = init_pseudo_inputs(post, b, 20, seed=0)
        theta, Z, _ = optimize_batch(post, b, theta, Z, "vfe", cfg)
        post, _ = vfe_update(post, b, theta, Z)
    return abs(np.log(theta.lengthscales[0]) - ml_log_ls), theta.noise_variance / 0.1


def test_5_hyperparameter_tracking():
    seeds = (0, 1, 2)
    res, secs = timed(lambda: [_track(s) for s in seeds])
    gaps, ratios = zip(*res)
    ok = max(gaps) <= 0.3 and min(ratios) >= 0.8
    detail = f"|log ls - ML| max {max(gaps):.3f} (<= 0.3), noise/true min {min(ratios):.2f} (>= 0.8), seeds {list(seeds)}"
    assert report(5, "hyperparameter tracking", ok, detail, secs, 180), REPORT[-1]


def _monotone(n):
    rng = np.random.default_rng(2024)
    worst = np.inf
    for i in range(n):
        old, batch, theta, Z = equivalence.random_instance(rng, dim=1 + i % 2)
        if i % 3 == 0:
            obj, f0 = "vfe", vfe_energy(old, batch, theta, Z).total
        else:
            a = 0.5 if i % 3 == 1 else 1.0
            obj, f0 = PepConfig(a), pep_energy(old, batch, theta, Z, PepConfig(a))
        _, _, f1 = optimize_batch(old, batch, theta, Z, obj, OptimConfig(max_iters=15, seed=i))
        worst = min(worst, f1 - f0)
    return worst


def test_6_optimizer_monotonicity():
    worst, secs = timed(lambda: _monotone(50))
    ok = worst >= -1e-9
    assert report(6, "optimizer never lowers the energy", ok, f"min gain {worst:.3e} over 50 instances", secs, 60), REPORT[-1]


def _drift(seed):
    X, y = synth_gp_stream(1, 4000, Hyperparams.from_values([0.8], 1.0, 0.1), seed)
    plan = StreamPlan.interleaved(4000, 200, window_size=400)
    params = ModelParams(Hyperparams.from_values([1.0], 1.0, 0.1), num_pseudo=30, optim=OptimConfig(max_iters=10, seed=seed))
    ssgp = run_stream("ssgp-vfe", plan, params, X, y)
    gp = run_stream("gp-window", plan, params, X, y)
    assert len(ssgp) == len(gp) == 10
    return ssgp[-1].rmse, gp[-1].rmse


def test_7_streaming_beats_window():
    res, secs = timed(lambda: [_drift(s) for s in range(5)])
    wins = sum(a <= b for a, b in res)
    detail = f"{wins}/5 seeds with ssgp rmse <= gp-window rmse; " + ", ".join(f"{a:.3f}/{b:.3f}" for a, b in res)
    assert report(7, "streaming vs windowed exact GP", wins >= 4, detail, secs, 120), REPORT[-1]


def _cli_metrics(tmp, tag):
    rows = {}
    for method in ("ssgp-vfe", "ssgp-pep", "sgp-window"):
        out = tmp / f"{tag}-{method}.csv"
        cmd = [sys.executable, "-m", "streamgp.harness.cli", "run", "--method", method]
        cmd += ["--synthetic", "n=600,seed=3", "--batch-size", "60", "--window", "120", "--num-pseudo", "10"]
        cmd += ["--opt-iters", "5", "--order", "random", "--seed", "11", "--out", str(out)]
        subprocess.run(cmd, check=True, capture_output=True)
        with open(out, newline="") as fh:
            table = list(csv.reader(fh))
        drop = table[0].index("cumulative_seconds")
        rows[method] = [r[:drop] + r[drop + 1 :] for r in table]
    return rows


def test_8_cli_determinism(tmp_path):
    (a, b), secs = timed(lambda: (_cli_metrics(tmp_path, "a"), _cli_metrics(tmp_path, "b")))
    ok = a == b and all(len(v) == 6 for v in a.values())
    assert report(8, "repeat CLI runs give identical metric CSVs", ok, f"{len(a)} methods compared", secs, 60), REPORT[-1]


def _fixtures():
    failed = []
    for name, check in sorted(test_fixtures.CHECKS.items()):
        try:
            check(test_fixtures.load(name))
        except AssertionError:
            failed.append(name)
    return failed


def test_9_oracle_fixtures():
    failed, secs = timed(_fixtures)
    n = len(test_fixtures.CHECKS)
    detail = f"{n - len(failed)}/{n} fixtures match" + (f"; failing: {', '.join(failed)}" if failed else "")
    assert report(9, "golden oracle fixtures", not failed, detail, secs, 300), REPORT[-1]


if __name__ == "__main__":
    import tempfile

    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                pass
            print(REPORT[-1], flush=True)
    sys.exit(0 if all(line.startswith("PASS") for line in REPORT) else 1)
