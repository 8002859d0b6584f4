"""Dense linear-algebra primitives shared by the whole package.

Thin QR/SVD with fixed sign and rank conventions, numerically stable
log-determinants of small Gram matrices, and the plain-text matrix format
used by the CLI and the tests.  Everything here is a pure function of its
inputs; returned arrays are freshly allocated and safe to share between
threads.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPositiveDefinite, RankDeficient, ZeroMatrix

__all__ = [
    "ThinSvd",
    "as_matrix",
    "thin_qr",
    "thin_svd",
    "logdet_spd",
    "spectral_norm",
    "read_matrix",
    "write_matrix",
]

# Numerical-rank threshold: sigma kept when > RANK_TOL * sigma_1 * max(m, n).
RANK_TOL = 1e-12


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Validate ``values`` as a 2-d float64 array with finite entries.

    Raises ``ValueError`` for wrong dimensionality, empty axes, or NaN/Inf
    entries.  The result may share memory with the input when it already
    satisfies the dtype/layout requirements.
    """
    a = np.asarray(values, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class ThinSvd:
    """Thin singular value decomposition  M = left @ diag(s) @ right.T.

    ``singular_values`` are strictly positive and non-increasing; ``left``
    (m x k) and ``right`` (n x k) have orthonormal columns, with k the
    numerical rank of the input.
    """

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.singular_values)

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular_values) @ self.right.T


def thin_qr(m) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR factorization with nonnegative diagonal of R.

    Parameters
    ----------
    m : array_like, shape (n, p) with p <= n
        Matrix with full column rank.

    Returns
    -------
    (Q, R) : Q has orthonormal columns, R is upper triangular with
        nonnegative diagonal, and Q @ R reconstructs ``m``.  The sign
        convention makes the pair unique, hence deterministic across runs.

    Raises
    ------
    RankDeficient
        If a diagonal entry of R falls below 1e-12 * ||m||_F.
    """
    a = as_matrix(m)
    n, p = a.shape
    if p > n:
        raise ValueError(f"thin_qr needs p <= n, got shape {a.shape}")
    q, r = np.linalg.qr(a)
    diag = np.diagonal(r).copy()
    threshold = RANK_TOL * np.linalg.norm(a)
    if np.min(np.abs(diag)) <= threshold:
        raise RankDeficient(
            f"numerically rank-deficient input: |R_ii| <= {threshold:.3e}"
        )
    signs = np.sign(diag)
    return q * signs, signs[:, None] * r


def thin_svd(m) -> ThinSvd:
    """Thin SVD truncated at the numerical rank.

    Singular values below 1e-12 * sigma_1 * max(m, n) are dropped together
    with their singular vectors.

    Raises
    ------
    ZeroMatrix
        If every entry is below 1e-300 in magnitude.
    """
    a = as_matrix(m)
    if np.max(np.abs(a)) < 1e-300:
        raise ZeroMatrix("all entries numerically zero")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    k = int(np.sum(s > RANK_TOL * s[0] * max(a.shape)))
    return ThinSvd(u[:, :k].copy(), s[:k].copy(), vt[:k].T.copy())


def logdet_spd(g) -> float:
    """ln det of a symmetric positive definite matrix.

    Computed as twice the sum of the log-diagonal of the Cholesky factor,
    never by forming the determinant, so it does not over- or underflow for
    moderate dimensions.

    Raises
    ------
    NotPositiveDefinite
        If the factorization meets a nonpositive pivot.
    ValueError
        If ``g`` is not symmetric to 1e-12 relative.
    """
    a = as_matrix(g, "gram matrix")
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > 1e-12 * max(scale, 1e-300):
        raise ValueError("matrix is not symmetric to 1e-12 relative")
    sym = 0.5 * (a + a.T)
    try:
        chol = scipy.linalg.cholesky(sym, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return float(2.0 * np.sum(np.log(np.diagonal(chol))))


def spectral_norm(m) -> float:
    """Largest singular value of ``m``."""
    a = as_matrix(m)
    return float(np.linalg.svd(a, compute_uv=False)[0])


def write_matrix(path, m) -> None:
    """Write the plain-text matrix format: "rows cols" then one row per line.

    Values carry 17 significant digits, enough to round-trip float64.
    """
    a = as_matrix(m)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{a.shape[0]} {a.shape[1]}\n")
        for row in a:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_matrix(path) -> np.ndarray:
    """Read a matrix written by :func:`write_matrix`."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: first line must be 'rows cols'")
        rows, cols = int(header[0]), int(header[1])
        data = np.loadtxt(fh, ndmin=2)
    if data.shape != (rows, cols):
        raise ValueError(
            f"{path}: header promises {rows}x{cols}, body is {data.shape}"
        )
    return as_matrix(data, str(path))
