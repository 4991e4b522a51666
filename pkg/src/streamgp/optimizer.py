"""Per-batch maximisation of the online energy.

Gradients are central finite differences on the stacked unconstrained vector
``[log-hyperparameters; vec(Z)]``; steps come from BFGS with a halving
backtracking line search, so every accepted step increases the objective.
"""
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .base import DataBatch
from .errors import ConditioningError, ContractError
from .kernel import as_inputs
from .streaming_pep import PepConfig, pep_energy
from .streaming_vfe import vfe_energy

log = logging.getLogger(__name__)

# failures at a trial point reject the step instead of aborting
_RECOVERABLE = (ConditioningError, ContractError, np.linalg.LinAlgError, FloatingPointError)


@dataclass(frozen=True)
class OptimConfig:
    max_iters: int = 50
    grad_step: float = 1e-5
    convergence_tol: float = 1e-6
    optimize_pseudo: bool = True
    optimize_hypers: bool = True
    seed: int = 0
    max_halvings: int = 20

    def __post_init__(self):
        if self.max_iters < 0:
            raise ContractError("max_iters must be >= 0")
        if not self.grad_step > 0:
            raise ContractError("grad_step must be > 0")
        if not self.convergence_tol > 0:
            raise ContractError("convergence_tol must be > 0")


@dataclass
class MaximizeResult:
    x: np.ndarray
    fun: float
    fun_init: float
    n_iters: int
    n_evals: int


def _safe(fun):
    def wrapped(x):
        # overflow at a wild trial point just means the trial is rejected
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                val = float(fun(x))
        except _RECOVERABLE:
            return -math.inf
        return val if math.isfinite(val) else -math.inf

    return wrapped


def fd_gradient(fun, x, step=1e-5):
    """Central differences; falls back to one-sided where a side fails."""
    safe = _safe(fun)
    g = np.zeros_like(x)
    f0 = None
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        fp, fm = safe(x + e), safe(x - e)
        if math.isfinite(fp) and math.isfinite(fm):
            g[i] = (fp - fm) / (2 * step)
            continue
        if f0 is None:
            f0 = safe(x)
        if math.isfinite(fp):
            g[i] = (fp - f0) / step
        elif math.isfinite(fm):
            g[i] = (f0 - fm) / step
    return g


def maximize(fun, x0, cfg=OptimConfig()):
    """BFGS ascent with backtracking; never returns a worse point than x0.

    ``fun`` is evaluated once at x0 without protection, so errors there
    propagate to the caller.
    """
    x = np.array(x0, dtype=float)
    f = float(fun(x))
    if not math.isfinite(f):
        raise ContractError("objective is not finite at the initial point")
    f_init = f
    n_evals = 1
    if cfg.max_iters == 0 or x.size == 0:
        return MaximizeResult(x, f, f_init, 0, n_evals)

    safe = _safe(fun)
    g = fd_gradient(fun, x, cfg.grad_step)
    n_evals += 2 * x.size
    H = None
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if not np.any(g):
            break
        if H is None:
            H = np.eye(x.size) / max(1.0, np.abs(g).max())
        accepted = False
        for attempt in range(2):
            d = H @ g
            slope = g @ d
            if slope <= 0:
                H = np.eye(x.size) / max(1.0, np.abs(g).max())
                continue
            t = 1.0
            for _ in range(cfg.max_halvings + 1):
                x_new = x + t * d
                f_new = safe(x_new)
                n_evals += 1
                if f_new >= f + 1e-4 * t * slope and f_new > f:
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                break
            # retry once along the scaled gradient
            H = np.eye(x.size) / max(1.0, np.abs(g).max())
        if not accepted:
            break

        g_new = fd_gradient(fun, x_new, cfg.grad_step)
        n_evals += 2 * x.size
        s = x_new - x
        yv = g - g_new  # change in the gradient of -f
        sy = s @ yv
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(yv):
            if it == 1:
                H = np.eye(x.size) * (sy / (yv @ yv))
            rho = 1.0 / sy
            Hy = H @ yv
            H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + (rho * rho * (yv @ Hy) + rho) * np.outer(s, s)
        change = f_new - f
        x, f, g = x_new, f_new, g_new
        if change <= cfg.convergence_tol * max(1.0, abs(f)):
            break
    log.debug("maximize: %d iters, %d evals, %.6g -> %.6g", it, n_evals, f_init, f)
    return MaximizeResult(x, f, f_init, it, n_evals)


def _energy_fn(objective):
    if objective in (None, "vfe"):
        return lambda old, batch, th, Z: vfe_energy(old, batch, th, Z).total
    if isinstance(objective, str) and objective.startswith("pep"):
        alpha = float(objective.split(":", 1)[1]) if ":" in objective else 0.5
        objective = PepConfig(alpha)
    if isinstance(objective, (int, float)):
        objective = PepConfig(float(objective))
    if isinstance(objective, PepConfig):
        cfg = objective
        return lambda old, batch, th, Z: pep_energy(old, batch, th, Z, cfg)
    raise ContractError(f"unknown objective {objective!r}")


def optimize_batch(old, batch, theta_init, Z_init, objective="vfe", cfg=OptimConfig()):
    """Maximise the online energy over hyperparameters and new pseudo-inputs.

    ``objective`` is ``"vfe"``, a :class:`PepConfig`, an alpha value or
    ``"pep:<alpha>"``. Returns ``(theta, Z, energy)``.
    """
    if not isinstance(batch, DataBatch):
        batch = DataBatch(*batch)
    energy = _energy_fn(objective)
    Z_init = as_inputs(Z_init, theta_init.input_dim, "Z_init")
    th_vec = theta_init.to_vector()
    n_th = th_vec.size if cfg.optimize_hypers else 0

    def unpack(x):
        th = theta_init.from_vector(x[:n_th]) if cfg.optimize_hypers else theta_init
        Z = x[n_th:].reshape(Z_init.shape) if cfg.optimize_pseudo else Z_init
        return th, Z

    parts = []
    if cfg.optimize_hypers:
        parts.append(th_vec)
    if cfg.optimize_pseudo:
        parts.append(Z_init.ravel())
    x0 = np.concatenate(parts) if parts else np.zeros(0)

    def fun(x):
        th, Z = unpack(x)
        return energy(old, batch, th, Z)

    res = maximize(fun, x0, cfg)
    theta, Z = unpack(res.x)
    return theta, np.array(Z, dtype=float), res.fun


def _prune(Z, keep):
    """Drop points with the smallest nearest-neighbour distance until ``keep`` remain."""
    Z = np.array(Z, dtype=float)
    idx = list(range(Z.shape[0]))
    while len(idx) > keep:
        P = Z[idx]
        d2 = ((P[:, None, :] - P[None, :, :]) ** 2).sum(-1)
        np.fill_diagonal(d2, np.inf)
        nn = d2.min(1)
        # among the closest pair, drop the later point
        victim = int(np.flatnonzero(nn == nn.min())[-1])
        del idx[victim]
    return Z[idx]


def _spread_indices(n, k, rng):
    """k evenly spaced indices into range(n) with a seeded phase."""
    if k >= n:
        return np.arange(n)
    phase = rng.uniform()
    idx = np.floor((np.arange(k) + phase) * n / k).astype(int)
    return np.unique(np.clip(idx, 0, n - 1))


def init_pseudo_inputs(old, batch, num_pseudo, seed=0):
    """Initial pseudo-inputs for the next update.

    Keeps the old pseudo-inputs, except for roughly ``M * |batch| / (|batch| +
    n_seen)`` of them (the most crowded ones), which are replaced by evenly
    spaced inputs from the new batch.
    """
    if num_pseudo < 1:
        raise ContractError("num_pseudo must be >= 1")
    if not isinstance(batch, DataBatch):
        batch = DataBatch(*batch)
    rng = np.random.default_rng(seed)
    nb = len(batch)
    Ma = old.num_inducing
    if old.is_empty:
        n_new = min(num_pseudo, nb)
        kept = np.zeros((0, batch.X.shape[1]))
    else:
        n_new = math.ceil(num_pseudo * nb / (nb + old.n_seen))
        n_new = min(max(n_new, num_pseudo - Ma), nb)
        kept = _prune(old.Z, min(Ma, num_pseudo - n_new))
    new = batch.X[_spread_indices(nb, n_new, rng)]
    Z = np.vstack([kept, new])
    short = num_pseudo - Z.shape[0]
    if short > 0:
        warnings.warn(
            f"requested {num_pseudo} pseudo-inputs but only {Z.shape[0]} distinct candidates; "
            "adding jittered duplicates",
            RuntimeWarning,
            stacklevel=2,
        )
        scale = 1e-3 * max(np.ptp(Z, axis=0).max(), 1.0)
        src = Z[rng.integers(0, Z.shape[0], size=short)]
        Z = np.vstack([Z, src + scale * rng.standard_normal(src.shape)])
    return Z
