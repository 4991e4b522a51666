"""Online Power-EP (alpha-divergence) update for streaming sparse GP regression.

Same machinery as :mod:`streamgp.streaming_vfe`, with the two noise blocks
inflated: ``Sigma_y = s2 I + alpha diag(Q_f)`` for the new data and
``Sigma_a = D_a + alpha Q_a`` for the old-posterior message. In the whitened
coordinates of the old prior, with ``W = R R^T``,

    Sigma_a^-1  ->  R B^-1 R^T,    B = I + alpha R^T Qt R,

so neither D_a nor a Cholesky of the (often singular) Q_a is needed.
alpha -> 0 recovers the variational update; alpha = 1 is the EP/ADF update.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InvalidMessageError
from .linalg import cholesky, logdet_chol, symmetrize, tri_solve
from .streaming_vfe import LOG_2PI, finish, predict, prepare

__all__ = ["PepConfig", "pep_update", "pep_energy", "predict"]


@dataclass(frozen=True)
class PepConfig:
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ContractError(f"alpha must lie in (0, 1], got {self.alpha}")


def _psd_sqrt(W, name):
    lam, U = np.linalg.eigh(W)
    scale = max(1.0, np.abs(lam).max()) if lam.size else 1.0
    if lam.size and lam.min() < -1e-8 * scale:
        raise InvalidMessageError(f"{name} has eigenvalue {lam.min():.3e}; Sigma_a is not positive definite")
    return U * np.sqrt(np.maximum(lam, 0.0))


def _pep(old, batch, theta, Z_new, cfg):
    if not isinstance(cfg, PepConfig):
        cfg = PepConfig(float(cfg))
    a = cfg.alpha
    ws = prepare(old, batch, theta, Z_new)
    y = ws.batch.y
    n = y.size
    s2 = theta.noise_variance
    sig_y = s2 + a * ws.qf
    Vs = ws.V / np.sqrt(sig_y)
    Pw = Vs @ Vs.T
    cw = ws.V @ (y / sig_y)
    energy = -0.5 * np.sum(y * y / sig_y)
    energy -= 0.5 * np.sum(np.log1p(a * ws.qf / s2)) / a
    energy -= 0.5 * n * (LOG_2PI + np.log(s2))

    if ws.old is not None:
        o = ws.old
        R = _psd_sqrt(o.W, "S_a^-1 - K_aa'^-1")
        Ma = R.shape[0]
        LB = cholesky(np.eye(Ma) + a * symmetrize(R.T @ o.Qt @ R), "I + alpha R^T Q_a R", jitter=0.0)
        H = tri_solve(LB, R.T)  # H^T H = whitened Sigma_a^-1
        Qw = o.Qt @ o.w
        HQw = H @ Qw
        u = o.w - a * (H.T @ HQw)  # (I + alpha W Qt)^-1 w
        Pw = Pw + o.G @ (H.T @ H) @ o.G.T
        cw = cw + o.G @ u
        energy += 0.5 * a * (o.w @ Qw - a * HQw @ HQw)
        energy += 0.5 * o.logdet_prev - 0.5 * o.mahal_prev
        energy -= 0.5 * np.sum(np.log1p(np.diag(LB) - 1.0)) * 2.0 / a

    post, logdet_D, quad = finish(ws, symmetrize(Pw), cw)
    energy += -0.5 * logdet_D + 0.5 * quad
    return post, float(energy)


def pep_update(old, batch, theta_new, Z_new, cfg):
    """Power-EP streaming update; returns (q_new(b), energy)."""
    return _pep(old, batch, theta_new, Z_new, cfg)


def pep_energy(old, batch, theta_new, Z_new, cfg):
    """Approximate online log marginal likelihood under Power-EP."""
    return _pep(old, batch, theta_new, Z_new, cfg)[1]
