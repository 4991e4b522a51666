"""Replay a dataset as an ordered mini-batch stream and log per-batch metrics.

Four learners share one driver loop:

* ``ssgp-vfe`` / ``ssgp-pep``: the streaming sparse updates, with per-batch
  optimisation of hyperparameters and pseudo-inputs;
* ``gp-window`` / ``sgp-window``: exact or batch-sparse GPs refitted from
  scratch on the most recent ``window_size`` training points, warm-started
  from the previous hyperparameters.

Each batch appends one :class:`IterationRecord` and one CSV row; the file is
flushed per row so an aborted run leaves a valid prefix.
"""
import csv
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .. import batch_sgp, exact_gp
from ..base import DataBatch
from ..errors import ContractError
from ..kernel import Hyperparams, as_inputs
from ..optimizer import OptimConfig, init_pseudo_inputs, maximize, optimize_batch
from ..streaming_pep import PepConfig, pep_update
from ..streaming_vfe import SparsePosterior, predict as ssgp_predict, vfe_update
from .metrics import metrics

log = logging.getLogger(__name__)

METHODS = ("ssgp-vfe", "ssgp-pep", "gp-window", "sgp-window")
CSV_COLUMNS = ("iteration", "cumulative_seconds", "mll", "rmse", "energy", "peak_bytes")
BYTES = 8


class StreamAborted(RuntimeError):
    def __init__(self, iteration, cause):
        super().__init__(f"stream aborted at batch {iteration}: {cause}")
        self.iteration = iteration


@dataclass(frozen=True)
class StreamPlan:
    batch_size: int
    test_indices: tuple = ()
    initial_train: int = 0
    order: str = "as-given"  # or "random"
    seed: int = 0
    window_size: Optional[int] = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        if self.initial_train < 0:
            raise ContractError("initial_train must be >= 0")
        if self.order not in ("as-given", "random"):
            raise ContractError(f"unknown order {self.order!r}")
        if self.window_size is not None and self.window_size < self.batch_size:
            raise ContractError("window_size must be >= batch_size")
        object.__setattr__(self, "test_indices", tuple(int(i) for i in self.test_indices))

    @classmethod
    def interleaved(cls, n, batch_size, stride=2, **kw):
        return cls(batch_size, tuple(range(1, n, stride)), **kw)

    def train_indices(self, n):
        test = set(self.test_indices)
        if any(i < 0 or i >= n for i in test):
            raise ContractError("test index out of range")
        idx = np.array([i for i in range(n) if i not in test], dtype=int)
        if self.order == "random":
            idx = np.random.default_rng(self.seed).permutation(idx)
        return idx

    def batches(self, n):
        """Training index arrays, one per stream step."""
        idx = self.train_indices(n)
        out = []
        start = 0
        if self.initial_train:
            out.append(idx[: self.initial_train])
            start = self.initial_train
        out.extend(idx[i : i + self.batch_size] for i in range(start, idx.size, self.batch_size))
        return [b for b in out if b.size]


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    cumulative_seconds: float
    mll: float
    rmse: float
    energy: float
    peak_bytes: int

    def row(self):
        return [
            str(self.iteration),
            repr(self.cumulative_seconds),
            repr(self.mll),
            repr(self.rmse),
            repr(self.energy),
            str(self.peak_bytes),
        ]


@dataclass(frozen=True)
class ModelParams:
    theta_init: Hyperparams
    num_pseudo: int = 20
    alpha: float = 0.5
    optim: OptimConfig = field(default_factory=OptimConfig)
    pseudo_init: Optional[np.ndarray] = None  # first-step pseudo-inputs; default from the data

    @property
    def fixed(self):
        o = self.optim
        return o.max_iters == 0 or not (o.optimize_hypers or o.optimize_pseudo)


class _Streaming:
    def __init__(self, params, pep):
        self.p = params
        self.theta = params.theta_init
        self.post = SparsePosterior.empty(params.theta_init.input_dim)
        self.objective = PepConfig(params.alpha) if pep else "vfe"
        self.pep = pep

    def step(self, batch):
        p, post = self.p, self.post
        if post.is_empty and p.pseudo_init is not None:
            Z = as_inputs(p.pseudo_init, self.theta.input_dim, "pseudo_init")
        elif p.optim.optimize_pseudo or post.is_empty:
            Z = init_pseudo_inputs(post, batch, p.num_pseudo, p.optim.seed)
        else:
            Z = post.Z
        theta = self.theta
        if not p.fixed:
            theta, Z, _ = optimize_batch(post, batch, theta, Z, self.objective, p.optim)
        if self.pep:
            self.post, energy = pep_update(post, batch, theta, Z, self.objective)
        else:
            self.post, br = vfe_update(post, batch, theta, Z)
            energy = br.total
        self.theta = theta
        Mb, Ma, nb = Z.shape[0], post.num_inducing, len(batch)
        work = Mb * nb + 3 * Mb * Mb + Ma * Mb + 2 * Ma * Ma
        nbytes = self.post.state_bytes() + BYTES * (work + batch.X.size + nb)
        return energy, nbytes

    def predict(self, Xs):
        return ssgp_predict(self.post, Xs)


class _Window:
    def __init__(self, params, window, sparse):
        self.p = params
        self.theta = params.theta_init
        self.window = window
        self.sparse = sparse
        self.X = np.zeros((0, params.theta_init.input_dim))
        self.y = np.zeros(0)
        self.Z = None
        self.model = None

    def _objective(self, X, y, Z):
        o = self.p.optim
        th0 = self.theta
        n_th = th0.to_vector().size if o.optimize_hypers else 0
        pseudo = self.sparse and o.optimize_pseudo

        def unpack(v):
            th = Hyperparams.from_vector(v[:n_th]) if o.optimize_hypers else th0
            Zv = v[n_th:].reshape(Z.shape) if pseudo else Z
            return th, Zv

        def fun(v):
            th, Zv = unpack(v)
            if self.sparse:
                return batch_sgp.collapsed_bound(X, y, Zv, th)
            return exact_gp.log_marginal_likelihood(exact_gp.fit(X, y, th))

        parts = [th0.to_vector()] if o.optimize_hypers else []
        if pseudo:
            parts.append(Z.ravel())
        x0 = np.concatenate(parts) if parts else np.zeros(0)
        return fun, unpack, x0

    def step(self, batch):
        X = np.vstack([self.X, batch.X])
        y = np.concatenate([self.y, batch.y])
        if self.window is not None and y.size > self.window:
            X, y = X[-self.window :], y[-self.window :]
        self.X, self.y = X, y
        p = self.p
        Z = None
        if self.sparse:
            if self.Z is None and p.pseudo_init is not None:
                self.Z = as_inputs(p.pseudo_init, X.shape[1], "pseudo_init")
            if self.Z is None or p.optim.optimize_pseudo:
                self.Z = batch_sgp.init_pseudo_inputs(X, p.num_pseudo, seed=p.optim.seed)
            Z = self.Z
        fun, unpack, x0 = self._objective(X, y, Z)
        if not p.fixed:
            res = maximize(fun, x0, p.optim)
            self.theta, Z = unpack(res.x)
        if self.sparse:
            self.Z = np.array(Z, dtype=float)
            energy = batch_sgp.collapsed_bound(X, y, self.Z, self.theta)
            self.model = batch_sgp.fit_q(X, y, self.Z, self.theta)
            M, n = self.Z.shape[0], y.size
            nbytes = BYTES * (M * n + 3 * M * M + self.Z.size + M + X.size + n)
        else:
            self.model = exact_gp.fit(X, y, self.theta)
            energy = exact_gp.log_marginal_likelihood(self.model)
            nbytes = exact_gp.state_bytes(self.model)
        return energy, nbytes

    def predict(self, Xs):
        if self.sparse:
            return batch_sgp.predict(self.model, Xs)
        return exact_gp.predict(self.model, Xs)


def parse_method(method, alpha=0.5):
    """Accepts ``ssgp-pep(0.3)`` as shorthand for ``ssgp-pep`` with alpha 0.3."""
    m = method.strip()
    if m.startswith("ssgp-pep(") and m.endswith(")"):
        return "ssgp-pep", float(m[len("ssgp-pep(") : -1])
    if m not in METHODS:
        raise ContractError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    return m, alpha


def make_learner(method, params, plan):
    method, alpha = parse_method(method, params.alpha)
    if method in ("ssgp-vfe", "ssgp-pep"):
        if alpha != params.alpha:
            params = ModelParams(params.theta_init, params.num_pseudo, alpha, params.optim, params.pseudo_init)
        return _Streaming(params, pep=method == "ssgp-pep")
    return _Window(params, plan.window_size, sparse=method == "sgp-window")


def run_stream(
    method,
    plan,
    params,
    X,
    y,
    out=None,
    callback: Optional[Callable[[IterationRecord], None]] = None,
    clock=time.perf_counter,
):
    """Run one stream; returns the list of :class:`IterationRecord`.

    ``out`` (a path) receives the CSV incrementally. Any error inside a step
    is re-raised as :class:`StreamAborted` carrying the batch index.
    """
    X = as_inputs(X, params.theta_init.input_dim)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != X.shape[0]:
        raise ContractError("X and y lengths differ")
    test = np.array(plan.test_indices, dtype=int)
    if test.size == 0:
        raise ContractError("the plan has no test points")
    Xt, yt = X[test], y[test]
    learner = make_learner(method, params, plan)
    records = []
    fh = open(out, "w", newline="") if out is not None else None
    try:
        writer = csv.writer(fh) if fh else None
        if writer:
            writer.writerow(CSV_COLUMNS)
            fh.flush()
        t0 = clock()
        peak = 0
        for it, idx in enumerate(plan.batches(y.size), start=1):
            try:
                energy, nbytes = learner.step(DataBatch(X[idx], y[idx]))
                mll, rmse = metrics(learner.predict(Xt), yt)
            except (ContractError, ArithmeticError, np.linalg.LinAlgError) as exc:
                raise StreamAborted(it, exc) from exc
            peak = max(peak, int(nbytes))
            rec = IterationRecord(it, float(clock() - t0), mll, rmse, float(energy), peak)
            records.append(rec)
            log.info("batch %d: mll=%.4f rmse=%.4f energy=%.4f", it, mll, rmse, energy)
            if writer:
                writer.writerow(rec.row())
                fh.flush()
            if callback is not None:
                callback(rec)
    finally:
        if fh:
            fh.close()
    return records
