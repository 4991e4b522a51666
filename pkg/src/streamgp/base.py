"""Shared containers: observation batches and predictive marginals."""
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .kernel import as_inputs, kernel_diag, kernel_matrix
from .linalg import cholesky, get_jitter, tri_solve

# round-off allowance before a negative variance counts as an error
NEGATIVE_TOL = 1e-8


@dataclass(frozen=True)
class DataBatch:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = as_inputs(self.X)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] < 1:
            raise ContractError("a batch needs at least one observation")
        if y.shape[0] != X.shape[0]:
            raise ContractError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if not np.all(np.isfinite(y)):
            raise ContractError("y contains non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.y.shape[0]


@dataclass(frozen=True)
class PredictiveMarginals:
    mean: np.ndarray
    latent_var: np.ndarray
    observed_var: np.ndarray


def clamp_variance(var, what="latent variance"):
    if var.size and var.min() < -NEGATIVE_TOL:
        raise ContractError(f"{what} is negative beyond round-off ({var.min():.3e})")
    return np.maximum(var, 0.0)


def coincident(Z1, Z2):
    """Indicator matrix of exactly equal rows."""
    return np.all(Z1[:, None, :] == Z2[None, :, :], axis=-1).astype(float)


def pseudo_cross(Z, Xs, theta, jitter):
    """(K_zs, k_ss) with the pseudo-point jitter on points that coincide with Z.

    The jitter is treated as part of the pseudo-point covariance, so a test
    point sitting on a pseudo-input is that pseudo-point and predicting there
    reproduces q(u) exactly.
    """
    C = coincident(Z, Xs)
    return kernel_matrix(Z, Xs, theta) + jitter * C, kernel_diag(Xs, theta) + jitter * C.max(0, initial=0.0)


def project_gaussian(Z, m, S, theta, Xs):
    """Marginals of ``f(Xs)`` under ``q(u) = N(m, S)`` at pseudo-inputs Z.

    mean = K_su K_uu^-1 m,
    var  = k_ss - K_su K_uu^-1 K_us + K_su K_uu^-1 S K_uu^-1 K_us.
    """
    Xs = as_inputs(Xs, theta.input_dim, "Xs")
    eps = get_jitter()
    Luu = cholesky(kernel_matrix(Z, Z, theta), "K_uu", jitter=eps)
    Kzs, kss = pseudo_cross(Z, Xs, theta, eps)
    A = tri_solve(Luu, Kzs)  # L^-1 K_us
    Sw = tri_solve(Luu, tri_solve(Luu, S).T).T  # L^-1 S L^-T
    mw = tri_solve(Luu, m)
    mean = A.T @ mw
    var = kss - np.sum(A * A, 0) + np.sum(A * (Sw @ A), 0)
    var = clamp_variance(var)
    return PredictiveMarginals(mean, var, var + theta.noise_variance)
