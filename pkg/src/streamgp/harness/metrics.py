import numpy as np

from ..errors import ContractError

LOG_2PI = np.log(2.0 * np.pi)


def metrics(pred, y_true):
    """(mean log predictive density of y, root mean squared error of the mean)."""
    y = np.asarray(y_true, dtype=float).reshape(-1)
    mu = np.asarray(pred.mean, dtype=float).reshape(-1)
    var = np.asarray(pred.observed_var, dtype=float).reshape(-1)
    if not (y.size == mu.size == var.size):
        raise ContractError("prediction and target lengths differ")
    if y.size == 0:
        raise ContractError("empty test set")
    if np.any(var <= 0):
        raise ContractError("predictive variance must be positive")
    r = y - mu
    mll = float(np.mean(-0.5 * (LOG_2PI + np.log(var) + r * r / var)))
    rmse = float(np.sqrt(np.mean(r * r)))
    return mll, rmse
