"""CSV codec, train/test splitting, input scaling and synthetic GP streams."""
import csv
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from ..kernel import Hyperparams, kernel_matrix
from ..linalg import cholesky

MAX_SYNTH_POINTS = 5000


class CsvParseError(ContractError):
    def __init__(self, path, line, detail):
        super().__init__(f"{path}:{line}: {detail}")
        self.path = path
        self.line = line


def load_csv(path, x_cols, y_col):
    """Read input columns ``x_cols`` and target ``y_col`` from a headed CSV.

    Row order is preserved. Missing columns, ragged rows and cells that are
    not finite decimal numbers raise :class:`CsvParseError` with the line.
    """
    if isinstance(x_cols, str):
        x_cols = [c for c in x_cols.split(",") if c]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvParseError(path, 1, "missing header row") from None
        missing = [c for c in [*x_cols, y_col] if c not in header]
        if missing:
            raise CsvParseError(path, 1, f"missing column(s) {', '.join(missing)}")
        cols = [header.index(c) for c in x_cols]
        ycol = header.index(y_col)
        X, y = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CsvParseError(path, line, f"expected {len(header)} fields, found {len(row)}")
            vals = []
            for j in [*cols, ycol]:
                try:
                    v = float(row[j])
                except ValueError:
                    raise CsvParseError(path, line, f"non-numeric cell {row[j]!r} in column {header[j]}") from None
                if not math.isfinite(v):
                    raise CsvParseError(path, line, f"non-finite cell {row[j]!r} in column {header[j]}")
                vals.append(v)
            X.append(vals[:-1])
            y.append(vals[-1])
    if not y:
        raise CsvParseError(path, 2, "no data rows")
    return np.array(X, dtype=float).reshape(len(y), len(cols)), np.array(y, dtype=float)


def write_csv(path, X, y, x_names=None, y_name="y"):
    X = np.asarray(X, dtype=float)
    X = X.reshape(X.shape[0], -1)
    x_names = x_names or [f"x{i}" for i in range(X.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*x_names, y_name])
        for row, t in zip(X, np.asarray(y, dtype=float)):
            w.writerow([repr(float(v)) for v in row] + [repr(float(t))])


def interleave_split(X, y, stride=2):
    """Rows with index % stride == 1 go to test, everything else to train."""
    X = np.asarray(X)
    y = np.asarray(y)
    n = y.shape[0]
    if n < 2:
        raise ContractError("need at least two rows to split")
    if stride < 2:
        raise ContractError("stride must be >= 2")
    test = np.arange(n) % stride == 1
    return (X[~test], y[~test]), (X[test], y[test])


@dataclass(frozen=True)
class AffineTransform:
    """Per-column map x -> offset + scale * x."""

    offset: np.ndarray
    scale: np.ndarray

    def __call__(self, X):
        return self.offset + self.scale * np.asarray(X, dtype=float)

    def inverse(self, X):
        return (np.asarray(X, dtype=float) - self.offset) / self.scale


def scale_inputs(X, target_range=(0.0, 10.0)):
    X = np.asarray(X, dtype=float)
    X2 = X.reshape(X.shape[0], -1)
    lo, hi = X2.min(0), X2.max(0)
    if np.any(hi <= lo):
        raise ContractError("cannot scale a constant column")
    a, b = target_range
    scale = (b - a) / (hi - lo)
    tf = AffineTransform(a - scale * lo, scale)
    return tf(X2).reshape(X.shape), tf


def synth_inputs(D, N, rng):
    if D == 1:
        return np.sort(rng.uniform(0.0, 10.0, N))[:, None]
    side = math.ceil(N ** (1.0 / D))
    axes = [np.linspace(0.0, 10.0, side)] * D
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, D)
    return grid[:N]


def synth_gp_stream(D, N, theta_true, seed=0):
    """Draw y ~ N(0, K_ff + noise I) at sorted 1-D times or a D-dim grid."""
    if not 1 <= N <= MAX_SYNTH_POINTS:
        raise ContractError(f"N must be in [1, {MAX_SYNTH_POINTS}]")
    if not isinstance(theta_true, Hyperparams):
        raise ContractError("theta_true must be Hyperparams")
    if theta_true.input_dim != D:
        raise ContractError("theta_true has the wrong input dimension")
    rng = np.random.default_rng(seed)
    X = synth_inputs(D, N, rng)
    K = kernel_matrix(X, X, theta_true)
    K[np.diag_indices_from(K)] += theta_true.noise_variance
    L = cholesky(K, "K_ff + noise*I")
    y = L @ rng.standard_normal(N)
    return X, y
