"""Synthetic test matrices with known ground truth.

Singular factors are drawn Haar-uniformly (QR of a Gaussian matrix with the
R-diagonal signs absorbed into Q, which plain QR alone would not give), and
the spectrum follows one of three models:

    flat         sigma_i = 10 * (1 - 0.3 * (i-1)/(L-1)), a gentle linear
                 decay with ratio ~1.43 between the ends;
    hockey-stick sigma_i = 10 * 0.6**(i-1) for i <= 20, then a constant
                 plateau at 10 * 0.6**19;
    explicit     caller-supplied positive values, sorted descending.

All randomness flows through numpy's default PCG64 generator; every function
taking a ``seed`` also accepts an existing ``numpy.random.Generator`` so a
caller can thread one stream through several draws.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidModelParams
from .linalg import as_matrix, read_matrix, thin_svd, write_matrix
from .objective import DataMatrix

__all__ = [
    "SpectrumModel",
    "RandomMatrixSpec",
    "SyntheticInstance",
    "haar_orthogonal",
    "haar_stiefel",
    "make_spectrum",
    "synthesize",
    "mean_center",
    "save_instance",
    "load_instance",
]

SPECTRUM_KINDS = ("flat", "hockey-stick", "explicit")


@dataclass(frozen=True)
class SpectrumModel:
    """Parametric description of a singular-value profile."""

    kind: str = "flat"
    values: tuple = ()  # only for kind == "explicit"

    def __post_init__(self):
        if self.kind not in SPECTRUM_KINDS:
            raise InvalidModelParams(f"unknown spectrum kind {self.kind!r}")
        if self.kind == "explicit" and not self.values:
            raise InvalidModelParams("explicit spectrum needs values")


@dataclass(frozen=True)
class RandomMatrixSpec:
    """Everything needed to reproduce one synthetic data matrix."""

    m: int
    n: int
    seed: int = 0
    spectrum: SpectrumModel = field(default_factory=SpectrumModel)
    mean_center: bool = False

    def spectrum_length(self) -> int:
        if self.spectrum.kind == "explicit":
            length = len(self.spectrum.values)
            if length > min(self.m, self.n):
                raise InvalidModelParams(
                    f"explicit spectrum of length {length} exceeds min(m, n) = {min(self.m, self.n)}"
                )
            return length
        return min(self.m, self.n)


@dataclass
class SyntheticInstance:
    """A synthesized data matrix together with its ground truth."""

    a: DataMatrix
    true_singular_values: np.ndarray
    _right_factor: np.ndarray

    def ground_truth_vp(self, p: int) -> np.ndarray:
        """Leading p columns of the true right-singular factor."""
        if not 1 <= p <= self._right_factor.shape[1]:
            raise ValueError(f"p must be in [1, {self._right_factor.shape[1]}]")
        return self._right_factor[:, :p].copy()


def haar_orthogonal(n: int, seed) -> np.ndarray:
    """Haar-distributed n x n orthogonal matrix, deterministic per seed."""
    return haar_stiefel(n, n, seed)


def haar_stiefel(n: int, k: int, seed) -> np.ndarray:
    """Haar-uniform n x k matrix with orthonormal columns (k <= n)."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    for _ in range(5):
        q, r = np.linalg.qr(rng.standard_normal((n, k)))
        diag = np.diagonal(r)
        # Gaussian draws are full rank almost surely; retry just in case.
        if np.all(diag != 0):
            return q * np.sign(diag)
    raise RuntimeError("failed to draw a full-rank Gaussian matrix")


def make_spectrum(model: SpectrumModel, length: int) -> np.ndarray:
    """Evaluate a spectrum model at the given length (descending, positive)."""
    if length < 1:
        raise InvalidModelParams(f"spectrum length must be >= 1, got {length}")
    if model.kind == "flat":
        if length == 1:
            return np.array([10.0])
        i = np.arange(length, dtype=float)
        return 10.0 * (1.0 - 0.3 * i / (length - 1))
    if model.kind == "hockey-stick":
        i = np.arange(length, dtype=float)
        return 10.0 * 0.6 ** np.minimum(i, 19.0)
    values = np.asarray(model.values, dtype=float)
    if len(values) != length:
        raise InvalidModelParams(
            f"explicit spectrum has {len(values)} values, expected {length}"
        )
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise InvalidModelParams("explicit spectrum values must be positive and finite")
    return np.sort(values)[::-1].copy()


def synthesize(spec: RandomMatrixSpec) -> SyntheticInstance:
    """Build A = U diag(sigma) V' with Haar factors and the chosen spectrum.

    The ground truth is the leading part of V.  With mean centering on, the
    columns of A are centered first and the ground truth is recomputed from
    the centered matrix, since centering changes the spectrum.
    """
    length = spec.spectrum_length()
    sigma = make_spectrum(spec.spectrum, length)
    seeds = np.random.SeedSequence(spec.seed).generate_state(2)
    u = haar_stiefel(spec.m, length, int(seeds[0]))
    v = haar_stiefel(spec.n, length, int(seeds[1]))
    a = (u * sigma) @ v.T
    if spec.mean_center:
        a = mean_center(a)
        svd = thin_svd(a)
        return SyntheticInstance(
            DataMatrix(a, mean_centered=True), svd.singular_values, svd.right
        )
    return SyntheticInstance(DataMatrix(a), sigma, v)


def mean_center(a) -> np.ndarray:
    """Subtract the column-mean row from every row."""
    arr = as_matrix(a)
    if arr.shape[0] < 2:
        raise ValueError("mean centering needs at least two rows")
    return arr - arr.mean(axis=0, keepdims=True)


# --- instance serialization -------------------------------------------------
#
# A saved instance is a pair of files: "<stem>.txt" in the matrix text format
# and "<stem>.meta.txt" with "key = value" lines (see load_instance for keys).


def _fmt_floats(values) -> str:
    return ",".join(f"{v:.17g}" for v in values)


def save_instance(instance: SyntheticInstance, spec: RandomMatrixSpec, stem) -> tuple[str, str]:
    """Write matrix + metadata sidecar; returns the two paths."""
    matrix_path = f"{stem}.txt"
    meta_path = f"{stem}.meta.txt"
    write_matrix(matrix_path, instance.a.a)
    lines = [
        "format = detflow-instance-v1",
        f"m = {spec.m}",
        f"n = {spec.n}",
        f"seed = {spec.seed}",
        f"spectrum.kind = {spec.spectrum.kind}",
        f"spectrum.length = {spec.spectrum_length()}",
        f"mean_center = {'on' if spec.mean_center else 'off'}",
        f"true_singular_values = {_fmt_floats(instance.true_singular_values)}",
    ]
    if spec.spectrum.kind == "explicit":
        lines.insert(6, f"spectrum.values = {_fmt_floats(spec.spectrum.values)}")
    with open(meta_path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    return matrix_path, meta_path


def load_instance(matrix_path) -> tuple[DataMatrix, dict]:
    """Read a saved instance; returns (DataMatrix, metadata dict).

    The metadata dict carries the sidecar keys verbatim plus
    ``true_singular_values`` parsed into an array.  The sidecar is located by
    replacing the ".txt" suffix with ".meta.txt".
    """
    matrix_path = str(matrix_path)
    a = read_matrix(matrix_path)
    stem = matrix_path[:-4] if matrix_path.endswith(".txt") else matrix_path
    meta_path = f"{stem}.meta.txt"
    meta: dict = {}
    with open(meta_path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    mean_centered = meta.get("mean_center", "off") == "on"
    if "true_singular_values" in meta:
        meta["true_singular_values"] = np.array(
            [float(v) for v in meta["true_singular_values"].split(",")]
        )
    return DataMatrix(a, mean_centered=mean_centered), meta
