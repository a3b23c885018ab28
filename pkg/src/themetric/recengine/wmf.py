"""
Weighted matrix factorization for one-class data, by alternating least squares.

Every (user, item) cell carries preference 1 if observed and 0 otherwise, with
confidence ``a`` on observed and ``b`` on unobserved cells.  Each half-sweep
solves, per row,

    (b Y'Y + (a - b) sum_{i in obs} y_i y_i' + reg I) x = a sum_{i in obs} y_i

which costs one shared ``Y'Y`` plus work proportional to the row's observed
entries.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ..corpus import Ratings
from ..errors import DataError, DivergenceError, SingularSystemError
from .base import TrainConfig
from .factor import INIT_STD, FactorModel

_PIVOT_RTOL = 1e-12


@njit(cache=True)
def _cholesky_solve(A, rhs, out):
    # in-place Cholesky of A (lower), then forward/back substitution into out
    d = A.shape[0]
    scale = 0.0
    for f in range(d):
        if A[f, f] > scale:
            scale = A[f, f]
    tol = _PIVOT_RTOL * max(scale, 1.0)
    for j in range(d):
        s = A[j, j]
        for k in range(j):
            s -= A[j, k] * A[j, k]
        if s <= tol:
            return False
        A[j, j] = np.sqrt(s)
        for i in range(j + 1, d):
            s = A[i, j]
            for k in range(j):
                s -= A[i, k] * A[j, k]
            A[i, j] = s / A[j, j]
    y = rhs.copy()
    for i in range(d):
        s = y[i]
        for k in range(i):
            s -= A[i, k] * y[k]
        y[i] = s / A[i, i]
    for i in range(d - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, d):
            s -= A[k, i] * out[k]
        out[i] = s / A[i, i]
    return True


@njit(cache=True)
def _als_half(indptr, indices, X, Y, base, a, b):
    # solve every row of X against fixed Y; returns the failing row or -1
    d = Y.shape[1]
    A = np.empty((d, d))
    rhs = np.empty(d)
    w = a - b
    for u in range(X.shape[0]):
        A[:, :] = base
        rhs[:] = 0.0
        for p in range(indptr[u], indptr[u + 1]):
            i = indices[p]
            for f in range(d):
                yf = Y[i, f]
                rhs[f] += a * yf
                for g in range(f + 1):
                    A[f, g] += w * yf * Y[i, g]
        for f in range(d):
            for g in range(f + 1, d):
                A[f, g] = A[g, f]
        if not _cholesky_solve(A, rhs, X[u]):
            return u
    return -1


def normal_matrix(Y: np.ndarray, observed: np.ndarray, a: float, b: float, reg: float) -> np.ndarray:
    """The per-row system matrix, for inspection and tests."""
    Yo = Y[observed]
    return b * (Y.T @ Y) + (a - b) * (Yo.T @ Yo) + reg * np.eye(Y.shape[1])


def wmf_objective(train: Ratings, X, Y, a: float, b: float, reg: float) -> float:
    """Full weighted squared loss over all cells plus L2, without materializing the dense matrix."""
    s = np.einsum("ij,ij->i", X[train.users], Y[train.items])
    dense_part = b * np.sum((X.T @ X) * (Y.T @ Y))
    obs_part = np.sum(a * (1.0 - s) ** 2 - b * s**2)
    return float(dense_part + obs_part + reg * (np.sum(X * X) + np.sum(Y * Y)))


def fit_wmf(train: Ratings, config: TrainConfig) -> FactorModel:
    if len(train) == 0:
        raise DataError("WMF: empty train set")
    a, b = config.confidence, config.unobserved_confidence
    reg = config.regularization
    d = config.factors
    rng = np.random.default_rng(config.seed)
    X = rng.normal(0.0, INIT_STD, (train.n_users, d))
    Y = rng.normal(0.0, INIT_STD, (train.n_items, d))
    csr, csc = train.csr, train.csc
    eye = np.eye(d)
    history = []
    for sweep in range(1, config.epochs + 1):
        for rows, (ptr, idx), other in ((X, (csr.indptr, csr.indices), Y), (Y, (csc.indptr, csc.indices), X)):
            base = b * (other.T @ other) + reg * eye
            bad = _als_half(ptr, idx, rows, other, base, a, b)
            if bad >= 0:
                raise SingularSystemError(
                    f"WMF sweep {sweep}: normal equations for row {bad} are singular; "
                    "use regularization > 0"
                )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise DivergenceError("WMF", sweep)
        history.append(wmf_objective(train, X, Y, a, b, reg))
    return FactorModel("WMF", X, Y, None, None, 0.0, config, history)
