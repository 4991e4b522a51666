"""Cholesky helpers and the global jitter setting.

Every Cholesky in the package goes through :func:`cholesky`, which adds the
current jitter to the diagonal first. The jitter lives in a context variable
so it can be overridden locally (and per thread) with :func:`jitter_scope`::

    with jitter_scope(1e-10):
        post, energy = vfe_update(...)
"""
from contextlib import contextmanager
from contextvars import ContextVar

import numpy as np
from scipy import linalg as sla

from .errors import ConditioningError

DEFAULT_JITTER = 1e-6

_jitter = ContextVar("streamgp_jitter", default=DEFAULT_JITTER)


def get_jitter():
    return _jitter.get()


def set_jitter(value):
    """Set the jitter for the current context. Returns a reset token."""
    value = float(value)
    if not value >= 0.0:
        raise ValueError(f"jitter must be non-negative, got {value}")
    return _jitter.set(value)


@contextmanager
def jitter_scope(value):
    token = set_jitter(value)
    try:
        yield
    finally:
        _jitter.reset(token)


def cholesky(A, name="matrix", jitter=None):
    """Lower Cholesky factor of ``A + jitter * I``.

    Raises :class:`ConditioningError` naming ``name`` on failure.
    """
    A = np.asarray(A, dtype=float)
    if A.shape[0] == 0:
        return np.zeros((0, 0))
    eps = get_jitter() if jitter is None else jitter
    try:
        return sla.cholesky(A + eps * np.eye(A.shape[0]), lower=True, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConditioningError(name, str(exc)) from None


def tri_solve(L, B, trans=False):
    """Solve ``L X = B`` (or ``L^T X = B`` when ``trans``) for lower-triangular L."""
    return sla.solve_triangular(L, B, lower=True, trans=1 if trans else 0, check_finite=False)


def chol_solve(L, B):
    """Solve ``(L L^T) X = B``."""
    return sla.cho_solve((L, True), B, check_finite=False)


def logdet_chol(L):
    return 2.0 * np.sum(np.log(np.diag(L)))


def symmetrize(A):
    return 0.5 * (A + A.T)
