"""Trace and determinant inflation objectives and their gradients.

The data matrix A (m x n) is wrapped in :class:`DataMatrix`, which caches
the n x n Gram matrix and the thin SVD; a candidate loading X (n x p, full
column rank) is wrapped in :class:`LoadingMatrix`.  The objective functions
also accept raw arrays so that solver inner loops can skip re-validation.

Objectives:

    g_trace(X) = ||AX||_F^2 / ||X||_F^2
    g_det(X)   = det(X'A'AX) / det(X'X)
    f_det      = ln g_det          f_trace = ln g_trace

g_det is invariant under any change of basis X -> X @ Theta with Theta
invertible; g_trace is not.
"""

from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import RankDeficient, RankDeficientProjection, ZeroProjection
from .linalg import as_matrix, thin_svd

__all__ = [
    "DataMatrix",
    "LoadingMatrix",
    "g_trace",
    "g_det",
    "f_det",
    "f_trace",
    "grad_f_det",
    "grad_f_trace",
    "det_value_and_grad",
    "trace_value_and_grad",
    "finite_difference_gradient",
]


class DataMatrix:
    """Immutable wrapper around the m x n data matrix with cached metadata.

    The Gram matrix and thin SVD are computed lazily on first use and then
    reused; both are pure functions of the wrapped array, so a duplicate
    computation under concurrent first access is harmless.
    """

    def __init__(self, a, mean_centered: bool = False):
        self.a = as_matrix(a, "data matrix")
        self.m, self.n = self.a.shape
        self.mean_centered = bool(mean_centered)
        if self.mean_centered:
            col_sums = np.abs(self.a.sum(axis=0))
            if np.max(col_sums) > 1e-10 * max(np.linalg.norm(self.a), 1e-300):
                raise ValueError("matrix flagged mean_centered has nonzero column sums")

    @cached_property
    def gram(self) -> np.ndarray:
        """The n x n Gram matrix A'A."""
        return self.a.T @ self.a

    @cached_property
    def svd(self):
        return thin_svd(self.a)

    @property
    def rank(self) -> int:
        return self.svd.rank

    def apply_gram(self, x: np.ndarray) -> np.ndarray:
        """A'A @ x, evaluated as A'(Ax) when m < n and via the cached Gram
        otherwise, keeping the cost at O(min(m, n) * n * p)."""
        if self.m < self.n:
            return self.a.T @ (self.a @ x)
        return self.gram @ x


class LoadingMatrix:
    """An n x p candidate loading with verified full column rank."""

    def __init__(self, x):
        arr = as_matrix(x, "loading matrix")
        s = np.linalg.svd(arr, compute_uv=False)
        if s[-1] <= 1e-12 * s[0]:
            raise RankDeficient(
                f"loading matrix is numerically rank deficient (sigma_p/sigma_1 = {s[-1] / s[0]:.3e})"
            )
        self.x = arr

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def _loading_array(x) -> np.ndarray:
    if isinstance(x, LoadingMatrix):
        return x.x
    return np.asarray(x, dtype=float)


def _cholesky(g: np.ndarray, err: type) -> np.ndarray:
    try:
        return scipy.linalg.cholesky(0.5 * (g + g.T), lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise err(str(exc)) from exc


def _logdet_from_chol(chol: np.ndarray) -> float:
    return float(2.0 * np.sum(np.log(np.diagonal(chol))))


def _det_factors(data: DataMatrix, x):
    """Shared factorizations for the determinant objective.

    Returns (xa, ax, b, chol1, chol2) with b = A'A x, chol1/chol2 the
    Cholesky factors of X'X and X'A'AX.  The projected Gram is formed as
    (AX)'(AX), which is symmetric PSD by construction.
    """
    xa = _loading_array(x)
    ax = data.a @ xa
    g1 = xa.T @ xa
    g2 = ax.T @ ax
    chol1 = _cholesky(g1, RankDeficient)
    chol2 = _cholesky(g2, RankDeficientProjection)
    return xa, ax, chol1, chol2


def g_trace(data: DataMatrix, x) -> float:
    """Trace inflation tr(X'A'AX) / tr(X'X), the classical PCA energy ratio."""
    xa = _loading_array(x)
    num = float(np.sum((data.a @ xa) ** 2))
    den = float(np.sum(xa**2))
    return num / den


def f_trace(data: DataMatrix, x) -> float:
    """ln g_trace.  Raises ZeroProjection when the projected energy vanishes."""
    xa = _loading_array(x)
    num = float(np.sum((data.a @ xa) ** 2))
    if num < 1e-300:
        raise ZeroProjection("tr(X'A'AX) is numerically zero")
    return float(np.log(num) - np.log(np.sum(xa**2)))


def f_det(data: DataMatrix, x) -> float:
    """Log volume inflation ln det(X'A'AX) - ln det(X'X).

    Raises
    ------
    RankDeficientProjection
        If A @ X has rank below p.
    """
    _, _, chol1, chol2 = _det_factors(data, x)
    return _logdet_from_chol(chol2) - _logdet_from_chol(chol1)


def g_det(data: DataMatrix, x) -> float:
    """Volume inflation det(X'A'AX) / det(X'X), evaluated as exp(f_det).

    May overflow to inf for large spectra; f_det is the stable surface.
    """
    return float(np.exp(f_det(data, x)))


def grad_f_det(data: DataMatrix, x) -> np.ndarray:
    """Gradient of f_det:  2 X (X'X)^-1 - 2 A'AX (X'A'AX)^-1.

    The two p x p inverses are applied through Cholesky solves, never formed
    explicitly.
    """
    return det_value_and_grad(data, x)[1]


def det_value_and_grad(data: DataMatrix, x) -> tuple[float, np.ndarray]:
    """(f_det, grad f_det) sharing one set of factorizations."""
    xa, ax, chol1, chol2 = _det_factors(data, x)
    b = data.a.T @ ax if data.m < data.n else data.gram @ xa
    term1 = scipy.linalg.cho_solve((chol1, True), xa.T, check_finite=False).T
    term2 = scipy.linalg.cho_solve((chol2, True), b.T, check_finite=False).T
    value = _logdet_from_chol(chol2) - _logdet_from_chol(chol1)
    return value, 2.0 * term1 - 2.0 * term2


def grad_f_trace(data: DataMatrix, x) -> np.ndarray:
    """Gradient of f_trace:  2 A'AX / tr(X'A'AX) - 2 X / tr(X'X)."""
    return trace_value_and_grad(data, x)[1]


def trace_value_and_grad(data: DataMatrix, x) -> tuple[float, np.ndarray]:
    """(f_trace, grad f_trace) sharing the projected product."""
    xa = _loading_array(x)
    ax = data.a @ xa
    num = float(np.sum(ax**2))
    if num < 1e-300:
        raise ZeroProjection("tr(X'A'AX) is numerically zero")
    den = float(np.sum(xa**2))
    b = data.a.T @ ax if data.m < data.n else data.gram @ xa
    grad = 2.0 * b / num - 2.0 * xa / den
    return float(np.log(num) - np.log(den)), grad


def finite_difference_gradient(fn, x, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of a matrix.

    Uses the per-entry step h = step * (1 + |entry|).  Intended as an
    independent oracle for the analytic gradients; it touches only function
    values.
    """
    xa = np.array(_loading_array(x), dtype=float)
    grad = np.empty_like(xa)
    for idx in np.ndindex(*xa.shape):
        h = step * (1.0 + abs(xa[idx]))
        orig = xa[idx]
        xa[idx] = orig + h
        f_plus = fn(xa)
        xa[idx] = orig - h
        f_minus = fn(xa)
        xa[idx] = orig
        grad[idx] = (f_plus - f_minus) / (2.0 * h)
    return grad
