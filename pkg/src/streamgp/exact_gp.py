"""Dense exact GP regression.

Used as a baseline in the harness and as the reference answer in the
equivalence tests for the sparse and streaming code paths.
"""
from dataclasses import dataclass

import numpy as np

from .base import DataBatch, PredictiveMarginals, clamp_variance
from .errors import ConditioningError
from .kernel import Hyperparams, as_inputs, kernel_diag, kernel_matrix
from .linalg import chol_solve, cholesky, logdet_chol, tri_solve

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class ExactModel:
    X: np.ndarray
    y: np.ndarray
    theta: Hyperparams
    chol: np.ndarray  # lower factor of K_ff + noise * I (jitter only if that fails)
    alpha: np.ndarray  # (K_ff + noise * I)^-1 y

    @property
    def num_data(self):
        return self.y.shape[0]


def fit(X, y, theta):
    batch = DataBatch(as_inputs(X, theta.input_dim), y)
    K = kernel_matrix(batch.X, batch.X, theta)
    K[np.diag_indices_from(K)] += theta.noise_variance
    # The noise term already regularises K; jitter is only a fallback.
    try:
        L = cholesky(K, "K_ff + noise*I", jitter=0.0)
    except ConditioningError:
        L = cholesky(K, "K_ff + noise*I")
    return ExactModel(batch.X, batch.y, theta, L, chol_solve(L, batch.y))


def log_marginal_likelihood(model):
    """log N(y; 0, K_ff + sigma_y^2 I)."""
    n = model.num_data
    return float(-0.5 * model.y @ model.alpha - 0.5 * logdet_chol(model.chol) - 0.5 * n * LOG_2PI)


def predict(model, Xs):
    theta = model.theta
    Xs = as_inputs(Xs, theta.input_dim, "Xs")
    Ksf = kernel_matrix(Xs, model.X, theta)
    mean = Ksf @ model.alpha
    V = tri_solve(model.chol, Ksf.T)
    var = clamp_variance(kernel_diag(Xs, theta) - np.sum(V * V, 0))
    return PredictiveMarginals(mean, var, var + theta.noise_variance)


def state_bytes(model):
    """Element count of the cached model state times 8 bytes."""
    return 8 * (model.X.size + model.y.size + model.chol.size + model.alpha.size)
