"""Batch collapsed variational sparse GP (Titsias bound).

All M x M work goes through two Choleskys: ``K_uu = L L^T`` and the inner
matrix ``B = I + L^-1 K_uf K_fu L^-T / sigma_y^2 = L_B L_B^T``.
"""
from dataclasses import dataclass

import numpy as np

from .base import DataBatch, project_gaussian
from .errors import ContractError
from .kernel import Hyperparams, as_inputs, kernel_diag, kernel_matrix
from .linalg import cholesky, logdet_chol, tri_solve

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class BatchSgpModel:
    Z: np.ndarray
    theta: Hyperparams
    q_mean: np.ndarray
    q_cov: np.ndarray

    @property
    def num_inducing(self):
        return self.Z.shape[0]


def _terms(X, y, Z, theta):
    batch = DataBatch(as_inputs(X, theta.input_dim), y)
    Z = as_inputs(Z, theta.input_dim, "Z")
    if Z.shape[0] < 1:
        raise ContractError("need at least one pseudo-input")
    s2 = theta.noise_variance
    L = cholesky(kernel_matrix(Z, Z, theta), "K_uu")
    A = tri_solve(L, kernel_matrix(Z, batch.X, theta)) / np.sqrt(s2)
    B = np.eye(Z.shape[0]) + A @ A.T
    LB = cholesky(B, "I + A A^T", jitter=0.0)
    # L_B^-1 A y / sigma
    beta = tri_solve(LB, A @ batch.y) / np.sqrt(s2)
    return batch, Z, L, A, LB, beta


def collapsed_bound(X, y, Z, theta):
    """F = log N(y; 0, Q_ff + s2 I) - tr(K_ff - Q_ff) / (2 s2)."""
    batch, Z, L, A, LB, beta = _terms(X, y, Z, theta)
    n = len(batch)
    s2 = theta.noise_variance
    bound = -0.5 * n * (LOG_2PI + np.log(s2))
    bound -= 0.5 * logdet_chol(LB)
    bound -= 0.5 * batch.y @ batch.y / s2
    bound += 0.5 * beta @ beta
    trace = kernel_diag(batch.X, theta).sum() - s2 * np.sum(A * A)
    bound -= 0.5 * trace / s2
    return float(bound)


def fit_q(X, y, Z, theta):
    """Optimal q(u) for fixed hyperparameters and pseudo-inputs.

    S = L B^-1 L^T and m = L B^-1 L^-1 K_uf y / s2.
    """
    batch, Z, L, A, LB, beta = _terms(X, y, Z, theta)
    mean = L @ tri_solve(LB, beta, trans=True)
    R = L @ tri_solve(LB, np.eye(Z.shape[0]), trans=True)  # L L_B^-T
    cov = R @ R.T
    return BatchSgpModel(Z, theta, mean, cov)


def predict(model, Xs):
    return project_gaussian(model.Z, model.q_mean, model.q_cov, model.theta, Xs)


def init_pseudo_inputs(X, num_inducing, seed=0, iters=20):
    """k-means style pseudo-input initialisation from a seeded subsample of X."""
    X = as_inputs(X)
    n = X.shape[0]
    if num_inducing >= n:
        return X.copy()
    rng = np.random.default_rng(seed)
    centres = X[np.sort(rng.choice(n, num_inducing, replace=False))].copy()
    for _ in range(iters):
        d2 = ((X[:, None, :] - centres[None, :, :]) ** 2).sum(-1)
        label = d2.argmin(1)
        moved = False
        for k in range(num_inducing):
            pts = X[label == k]
            if len(pts):
                c = pts.mean(0)
                moved |= not np.allclose(c, centres[k])
                centres[k] = c
        if not moved:
            break
    return centres
