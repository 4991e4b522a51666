"""ARD squared-exponential kernel and its hyperparameter container."""
from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class Hyperparams:
    """Kernel and noise parameters, stored as logs.

    ``lengthscales`` are in input units; ``signal_variance`` is sigma_f^2 and
    ``noise_variance`` is sigma_y^2.
    """

    log_lengthscales: np.ndarray
    log_signal_variance: float
    log_noise_variance: float

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.log_lengthscales, dtype=float)).copy()
        if ls.ndim != 1 or ls.size == 0:
            raise ContractError("log_lengthscales must be a non-empty vector")
        ls.setflags(write=False)
        object.__setattr__(self, "log_lengthscales", ls)
        object.__setattr__(self, "log_signal_variance", float(self.log_signal_variance))
        object.__setattr__(self, "log_noise_variance", float(self.log_noise_variance))
        vals = np.r_[ls, self.log_signal_variance, self.log_noise_variance]
        if not np.all(np.isfinite(vals)):
            raise ContractError("hyperparameters must be finite")

    @classmethod
    def from_values(cls, lengthscales, signal_variance, noise_variance):
        return cls(np.log(lengthscales), np.log(signal_variance), np.log(noise_variance))

    @classmethod
    def from_vector(cls, vec):
        vec = np.asarray(vec, dtype=float)
        return cls(vec[:-2], vec[-2], vec[-1])

    def to_vector(self):
        return np.r_[self.log_lengthscales, self.log_signal_variance, self.log_noise_variance]

    @property
    def input_dim(self):
        return self.log_lengthscales.size

    @property
    def lengthscales(self):
        return np.exp(self.log_lengthscales)

    @property
    def signal_variance(self):
        return float(np.exp(self.log_signal_variance))

    @property
    def noise_variance(self):
        return float(np.exp(self.log_noise_variance))

    def replace(self, **kw):
        fields = dict(
            log_lengthscales=self.log_lengthscales,
            log_signal_variance=self.log_signal_variance,
            log_noise_variance=self.log_noise_variance,
        )
        fields.update(kw)
        return Hyperparams(**fields)

    def __eq__(self, other):
        if not isinstance(other, Hyperparams):
            return NotImplemented
        return np.array_equal(self.to_vector(), other.to_vector())

    def __hash__(self):
        return hash(self.to_vector().tobytes())


def as_inputs(X, dim=None, name="X"):
    """Validate and return X as a float (N, D) array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ContractError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[1] < 1:
        raise ContractError(f"{name} needs at least one column")
    if dim is not None and X.shape[1] != dim:
        raise ContractError(f"{name} has {X.shape[1]} columns, hyperparameters expect {dim}")
    if not np.all(np.isfinite(X)):
        raise ContractError(f"{name} contains non-finite values")
    return X


def kernel_matrix(X1, X2, theta):
    """Gram block ``K[i, j] = sf2 * exp(-0.5 * sum_d ((x1_id - x2_jd) / l_d)^2)``."""
    X1 = as_inputs(X1, theta.input_dim, "X1")
    X2 = as_inputs(X2, theta.input_dim, "X2")
    ell = theta.lengthscales
    A = X1 / ell
    B = X2 / ell
    # per-dimension differences: no cancellation for nearby points
    sq = np.zeros((A.shape[0], B.shape[0]))
    for d in range(A.shape[1]):
        diff = A[:, d, None] - B[None, :, d]
        sq += diff * diff
    K = theta.signal_variance * np.exp(-0.5 * sq)
    if X1 is X2 or (X1.shape == X2.shape and np.array_equal(X1, X2)):
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, theta.signal_variance)
    return K


def kernel_diag(X, theta):
    X = as_inputs(X, theta.input_dim)
    return np.full(X.shape[0], theta.signal_variance)
