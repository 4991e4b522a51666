"""Online variational free-energy update for streaming sparse GP regression.

The old posterior q_old(a) = N(m_a, S_a) at pseudo-inputs z_old enters the
new step only through the ratio q_old(a) / p(a | theta_old), a Gaussian
"message" with precision ``Lambda = S_a^-1 - K_aa'^-1`` and shift
``h = S_a^-1 m_a``. Its covariance D_a = Lambda^-1 is never formed. The
message is carried in coordinates whitened by ``L_a = chol(K_aa')``:

    W = L_a^T Lambda L_a,    w = L_a^T h.

These are exactly ``D - I`` and ``L_b^-1 c`` from the step that produced the
posterior, so they are cached on :class:`SparsePosterior` instead of being
recovered from S_a (which is as ill-conditioned as K_aa').

Throughout, ``b`` quantities use the new hyperparameters and the old prior
K_aa' uses the hyperparameters the old posterior was fitted under.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .base import (
    NEGATIVE_TOL,
    DataBatch,
    PredictiveMarginals,
    clamp_variance,
    coincident,
    project_gaussian,
    pseudo_cross,
)
from .errors import ConditioningError, ContractError, InvalidMessageError
from .kernel import Hyperparams, as_inputs, kernel_diag, kernel_matrix
from .linalg import cholesky, get_jitter, logdet_chol, symmetrize, tri_solve

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class WhitenedMessage:
    precision: np.ndarray  # W, (M, M)
    shift: np.ndarray  # w, (M,)
    jitter: float  # jitter used when factorising K_aa'


@dataclass(frozen=True)
class SparsePosterior:
    """q(a) = N(mean, cov) at pseudo-inputs Z, fitted under ``theta``.

    ``Z`` with zero rows is the empty initial state. ``n_seen`` counts the
    observations summarised so far.
    """

    Z: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    theta: Optional[Hyperparams]
    n_seen: int = 0
    message: Optional[WhitenedMessage] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim != 2:
            raise ContractError("Z must be 2-D")
        m = np.asarray(self.mean, dtype=float).reshape(-1)
        S = np.asarray(self.cov, dtype=float).reshape(m.size, m.size)
        if Z.shape[0] != m.size:
            raise ContractError("Z, mean and cov sizes disagree")
        if m.size and self.theta is None:
            raise ContractError("a non-empty posterior needs the hyperparameters it was fitted under")
        if m.size and not np.allclose(S, S.T, atol=1e-10, rtol=0.0):
            raise ContractError("cov is not symmetric")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", S)

    @classmethod
    def empty(cls, input_dim):
        return cls(np.zeros((0, input_dim)), np.zeros(0), np.zeros((0, 0)), None)

    @property
    def num_inducing(self):
        return self.Z.shape[0]

    @property
    def is_empty(self):
        return self.Z.shape[0] == 0

    def prior_chol(self):
        """chol(K_aa' + jitter I) under the fitted hyperparameters."""
        jit = self.message.jitter if self.message is not None else None
        return cholesky(kernel_matrix(self.Z, self.Z, self.theta), "K_aa'", jitter=jit)

    def whitened_message(self):
        """(W, w, L_a); recovered from (mean, cov) when no cache is attached."""
        La = self.prior_chol()
        if self.message is not None:
            return self.message.precision, self.message.shift, La
        # S_a is as ill-conditioned as K_aa'; jitter here would distort S_a^-1
        try:
            Ls = cholesky(self.cov, "S_a", jitter=0.0)
        except ConditioningError:
            try:
                Ls = cholesky(self.cov, "S_a")
            except ConditioningError:
                raise InvalidMessageError("S_a is not positive definite") from None
        X = tri_solve(Ls, La)  # Ls^-1 L_a, so X^T X = L_a^T S_a^-1 L_a
        W = symmetrize(X.T @ X) - np.eye(self.num_inducing)
        w = X.T @ tri_solve(Ls, self.mean)
        return W, w, La

    def natural_params(self):
        """(S^-1, S^-1 m) of q(a)."""
        W, w, La = self.whitened_message()
        Linv = tri_solve(La, np.eye(self.num_inducing))
        prec = Linv.T @ (np.eye(self.num_inducing) + W) @ Linv
        return symmetrize(prec), Linv.T @ w

    def state_bytes(self):
        n = self.Z.size + self.mean.size + self.cov.size
        if self.message is not None:
            n += self.message.precision.size + self.message.shift.size
        return 8 * n


@dataclass(frozen=True)
class EnergyBreakdown:
    """Collapsed online energy and its additive parts.

    ``gaussian_term`` is -N/2 log(2 pi s2) - 1/2 log|D| - y'y/(2 s2)
    + 1/2 |L_D^-1 L_b^-1 c|^2; ``delta_a`` holds the remaining old-posterior
    terms; ``trace_term`` is -tr(Q_f)/(2 s2). With an empty old state
    ``delta_a`` is 0 and the total is the batch collapsed bound.
    """

    total: float
    gaussian_term: float
    trace_term: float
    delta_a: float


@dataclass
class OldTerms:
    """Old-posterior quantities expressed against the new pseudo-points."""

    W: np.ndarray  # whitened message precision
    w: np.ndarray  # whitened message shift
    G: np.ndarray  # L_b^-1 K_ba L_a^-T, (Mb, Ma)
    Qt: np.ndarray  # L_a^-1 Q_a L_a^-T
    logdet_prev: float  # log|I + W| = log|K_aa'| - log|S_a|
    mahal_prev: float  # w^T (I + W)^-1 w = m_a^T S_a^-1 m_a


@dataclass
class Workspace:
    batch: DataBatch
    theta: Hyperparams
    Z: np.ndarray
    Lb: np.ndarray
    V: np.ndarray  # L_b^-1 K_bf
    qf: np.ndarray  # diag(K_ff - K_fb K_bb^-1 K_bf), clamped
    old: Optional[OldTerms]
    n_prev: int = 0


def prepare(old, batch, theta, Z_new):
    """Factorisations shared by the VFE and Power-EP updates."""
    if not isinstance(batch, DataBatch):
        batch = DataBatch(*batch)
    Z_new = as_inputs(Z_new, theta.input_dim, "Z_new")
    batch = DataBatch(as_inputs(batch.X, theta.input_dim), batch.y)
    if Z_new.shape[0] < 1:
        raise ContractError("need at least one new pseudo-input")
    Lb = cholesky(kernel_matrix(Z_new, Z_new, theta), "K_bb")
    V = tri_solve(Lb, kernel_matrix(Z_new, batch.X, theta))
    qf = kernel_diag(batch.X, theta) - np.sum(V * V, 0)
    if qf.min() < -NEGATIVE_TOL:
        raise ConditioningError("K_bb", f"diag(Q_f) reaches {qf.min():.3e}")
    qf = np.maximum(qf, 0.0)

    old_terms = None
    if not old.is_empty:
        if old.Z.shape[1] != theta.input_dim:
            raise ContractError("old pseudo-inputs have the wrong dimension")
        W, w, La = old.whitened_message()
        Ma = old.num_inducing
        # Jitter is treated as part of the pseudo-point covariance, so a
        # pseudo-input shared by z_old and z_new keeps it in the cross block.
        eps = get_jitter()
        Kab = kernel_matrix(old.Z, Z_new, theta) + eps * coincident(old.Z, Z_new)
        Kaa = kernel_matrix(old.Z, old.Z, theta) + eps * np.eye(Ma)
        G = tri_solve(Lb, tri_solve(La, Kab).T)
        Qt = symmetrize(tri_solve(La, tri_solve(La, Kaa).T) - G.T @ G)
        try:
            Lp = cholesky(np.eye(Ma) + W, "I + W", jitter=0.0)
        except ConditioningError:
            raise InvalidMessageError("S_a^-1 - K_aa'^-1 is not positive semi-definite") from None
        u = tri_solve(Lp, w)
        old_terms = OldTerms(W, w, G, Qt, logdet_chol(Lp), float(u @ u))
    return Workspace(batch, theta, Z_new, Lb, V, qf, old_terms, old.n_seen)


def finish(ws, Pw, cw):
    """Solve for q(b) given the whitened data precision and shift.

    Returns the new posterior and (log|D|, |L_D^-1 c_w|^2).
    """
    Mb = ws.Z.shape[0]
    D = np.eye(Mb) + Pw
    try:
        LD = cholesky(D, "D", jitter=0.0)
    except ConditioningError:
        if ws.old is not None:
            raise InvalidMessageError("D = I + L_b^-1 K_bf^ Sigma^-1 K_f^b L_b^-T is not positive definite") from None
        raise
    gamma = tri_solve(LD, cw)
    R = tri_solve(LD, ws.Lb.T)  # L_D^-1 L_b^T
    cov = symmetrize(R.T @ R)
    mean = R.T @ gamma
    msg = WhitenedMessage(symmetrize(Pw), cw, get_jitter())
    post = SparsePosterior(ws.Z, mean, cov, ws.theta, ws.n_prev + len(ws.batch), msg)
    return post, logdet_chol(LD), float(gamma @ gamma)


def _vfe(old, batch, theta, Z_new):
    ws = prepare(old, batch, theta, Z_new)
    y = ws.batch.y
    n = y.size
    s2 = theta.noise_variance
    Pw = ws.V @ ws.V.T / s2
    cw = ws.V @ y / s2
    delta = 0.0
    if ws.old is not None:
        o = ws.old
        Pw = Pw + o.G @ o.W @ o.G.T
        cw = cw + o.G @ o.w
        delta = 0.5 * o.logdet_prev - 0.5 * o.mahal_prev - 0.5 * np.sum(o.W * o.Qt)
    post, logdet_D, quad = finish(ws, Pw, cw)
    gaussian = -0.5 * n * (LOG_2PI + np.log(s2)) - 0.5 * logdet_D - 0.5 * (y @ y) / s2 + 0.5 * quad
    trace = -0.5 * ws.qf.sum() / s2
    energy = EnergyBreakdown(float(gaussian + trace + delta), float(gaussian), float(trace), float(delta))
    return post, energy


def vfe_update(old, batch, theta_new, Z_new):
    """Absorb ``batch`` into the old posterior; returns (q_new(b), energy).

    An empty ``old`` reduces exactly to the batch collapsed method.
    """
    return _vfe(old, batch, theta_new, Z_new)


def vfe_energy(old, batch, theta_new, Z_new):
    """Collapsed online free energy (the optimiser's objective)."""
    return _vfe(old, batch, theta_new, Z_new)[1]


def predict(post, Xs, theta=None):
    """Predictive marginals of f and y at Xs under the streaming state."""
    if post.is_empty:
        raise ContractError("cannot predict from an empty posterior")
    theta = post.theta if theta is None else theta
    if post.message is None or theta != post.theta:
        return project_gaussian(post.Z, post.mean, post.cov, theta, Xs)
    Xs = as_inputs(Xs, theta.input_dim, "Xs")
    W, w, Lb = post.whitened_message()
    LD = cholesky(np.eye(post.num_inducing) + W, "D", jitter=0.0)
    Kzs, kss = pseudo_cross(post.Z, Xs, theta, post.message.jitter)
    A = tri_solve(Lb, Kzs)
    B = tri_solve(LD, A)
    mean = B.T @ tri_solve(LD, w)
    var = clamp_variance(kss - np.sum(A * A, 0) + np.sum(B * B, 0))
    return PredictiveMarginals(mean, var, var + theta.noise_variance)
