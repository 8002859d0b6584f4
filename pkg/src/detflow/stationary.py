"""Multiplicity calculus: stationarity tests, stationary values, and the
global-max / global-min / saddle taxonomy of the determinant model.

For a data matrix with distinct singular values ς_1 > ... > ς_ρ > 0 of
multiplicities m(1), ..., m(ρ), a full-rank loading X is stationary exactly
when range(X) decomposes into its intersections with the right-singular
spaces V_i.  The per-space intersection dimensions m(X, i) determine
everything else: the stationary value is Σ 2 m(X, i) ln ς_i, the point is a
global maximizer iff the profile equals the leading multiplicities, a global
minimizer iff the data has full column rank and the profile equals the
trailing multiplicities, and a saddle otherwise.

m(X, i) is computed as the number of principal-angle cosines between
range(X) and V_i that equal one to tolerance.  (The rank of the raw
cross-Gram block X'V_i measures the projection of range(X) onto V_i instead,
which coincides with the intersection only at stationary points and would
make the stationarity test vacuous.)
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptySpectrum,
    InconsistentStationarityTests,
    NotASaddle,
    ProfileSumMismatch,
    RankDeficientProjection,
)
from .linalg import thin_qr, thin_svd
from .objective import DataMatrix, grad_f_det, _loading_array

__all__ = [
    "GLOBAL_MAX",
    "GLOBAL_MIN",
    "SADDLE",
    "NOT_STATIONARY",
    "SpectrumEnumeration",
    "MultiplicityProfile",
    "StationaryClass",
    "SaddleCurve",
    "enumerate_spectrum",
    "leading_multiplicity",
    "trailing_multiplicity",
    "multiplicity_profile",
    "is_stationary",
    "stationary_value",
    "classify",
    "saddle_probe",
    "recover_svd",
    "format_classification_report",
]

GLOBAL_MAX = "global-max"
GLOBAL_MIN = "global-min"
SADDLE = "saddle"
NOT_STATIONARY = "not-stationary"

DEFAULT_COALESCE_TOL = 1e-8
DEFAULT_RANK_TOL = 1e-10
DEFAULT_GRAD_TOL = 1e-8


@dataclass(frozen=True)
class SpectrumEnumeration:
    """Distinct singular values (strictly decreasing) with multiplicities."""

    values: tuple
    multiplicities: tuple

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def rank(self) -> int:
        return int(sum(self.multiplicities))


@dataclass(frozen=True)
class MultiplicityProfile:
    """Per-distinct-value intersection dimensions m(X, i), plus p."""

    counts: tuple
    p: int

    @property
    def total(self) -> int:
        return int(sum(self.counts))


@dataclass(frozen=True)
class StationaryClass:
    verdict: str
    profile: MultiplicityProfile
    value: float | None  # f_det at the point when stationary, else None


def enumerate_spectrum(singular_values, coalesce_tol: float = DEFAULT_COALESCE_TOL) -> SpectrumEnumeration:
    """Group a non-increasing positive spectrum into distinct values.

    Consecutive values are merged when their difference is at most
    coalesce_tol * sigma_1; a merged group reports its mean.
    """
    values = np.atleast_1d(np.asarray(singular_values, dtype=float))
    if values.size == 0:
        raise EmptySpectrum("no singular values to enumerate")
    if np.any(values <= 0):
        raise ValueError("singular values must be strictly positive")
    if np.any(np.diff(values) > 1e-12 * values[0]):
        raise ValueError("singular values must be non-increasing")
    gap = coalesce_tol * values[0]
    distinct, mults = [], []
    group_start = 0
    for j in range(1, values.size + 1):
        if j == values.size or values[j - 1] - values[j] > gap:
            distinct.append(float(values[group_start:j].mean()))
            mults.append(j - group_start)
            group_start = j
    return SpectrumEnumeration(tuple(distinct), tuple(mults))


def leading_multiplicity(spectrum: SpectrumEnumeration, i: int, p: int) -> int:
    """Columns of any p-leading right-singular factor drawn from value i.

    ``i`` is 1-based.  The count is capped at m(i); without the cap the
    plain max(0, p - sum of earlier multiplicities) can exceed the space's
    dimension when the spectrum has repeats.
    """
    _check_index(spectrum, i, p)
    used = sum(spectrum.multiplicities[: i - 1])
    return min(spectrum.multiplicities[i - 1], max(0, p - used))


def trailing_multiplicity(spectrum: SpectrumEnumeration, i: int, p: int) -> int:
    """Columns of any p-trailing right-singular factor drawn from value i."""
    _check_index(spectrum, i, p)
    remaining = sum(spectrum.multiplicities[i:])
    return min(spectrum.multiplicities[i - 1], max(0, p - remaining))


def _check_index(spectrum: SpectrumEnumeration, i: int, p: int) -> None:
    if not 1 <= i <= spectrum.size:
        raise ValueError(f"index {i} outside 1..{spectrum.size}")
    if not 1 <= p <= spectrum.rank:
        raise ValueError(f"p={p} outside 1..{spectrum.rank}")


@dataclass(frozen=True)
class _Alignment:
    """Per-distinct-value geometry of a loading against the singular spaces."""

    spectrum: SpectrumEnumeration
    q: np.ndarray  # orthonormalized loading
    bases: tuple  # right-singular bases V_i, one per distinct value
    rotations: tuple  # full left factors of V_i' Q, columns sorted by cosine
    cosines: tuple  # principal-angle cosines per distinct value
    intersections: tuple  # m(X, i)
    projections: tuple  # dim of the projection of range(X) onto V_i


def _alignment(data: DataMatrix, x, rank_tol: float, coalesce_tol: float) -> _Alignment:
    svd = data.svd
    spectrum = enumerate_spectrum(svd.singular_values, coalesce_tol)
    q = thin_qr(_loading_array(x))[0]
    p = q.shape[1]
    s_ax = np.linalg.svd(data.a @ q, compute_uv=False)
    if s_ax[0] == 0 or s_ax[-1] <= 1e-12 * s_ax[0] * max(data.m, p):
        raise RankDeficientProjection("rank(A X) < p")
    bases, rotations, cosines, inter, proj = [], [], [], [], []
    start = 0
    for mult in spectrum.multiplicities:
        vi = svd.right[:, start : start + mult]
        start += mult
        u, cos, _ = np.linalg.svd(vi.T @ q)
        bases.append(vi)
        rotations.append(u)
        cosines.append(cos)
        inter.append(int(np.sum(cos >= 1.0 - rank_tol)))
        proj.append(int(np.sum(cos > rank_tol)))
    return _Alignment(
        spectrum, q, tuple(bases), tuple(rotations), tuple(cosines),
        tuple(inter), tuple(proj),
    )


def multiplicity_profile(data: DataMatrix, x, rank_tol: float = DEFAULT_RANK_TOL,
                         coalesce_tol: float = DEFAULT_COALESCE_TOL) -> MultiplicityProfile:
    """The intersection multiplicities m(X, i) of a full-rank loading.

    A direction counts toward m(X, i) when its principal-angle cosine with
    V_i exceeds 1 - rank_tol.  Invariant under X -> X Theta for invertible
    Theta.  Raises RankDeficientProjection when rank(A X) < p.
    """
    align = _alignment(data, x, rank_tol, coalesce_tol)
    return MultiplicityProfile(align.intersections, align.q.shape[1])


def is_stationary(data: DataMatrix, x, grad_tol: float = DEFAULT_GRAD_TOL,
                  rank_tol: float = DEFAULT_RANK_TOL,
                  coalesce_tol: float = DEFAULT_COALESCE_TOL) -> bool:
    """Dual stationarity test for the determinant model.

    Geometric test: m(X, i) equals the dimension of the projection of
    range(X) onto V_i for every distinct value.  Gradient test:
    ||grad f_det(X)||_F < grad_tol.  The two characterizations are
    redundant; when they disagree and the gradient norm is more than two
    decades away from the threshold, the disagreement is genuine and
    InconsistentStationarityTests is raised.  Within that band the
    geometric verdict wins (threshold jitter).
    """
    align = _alignment(data, x, rank_tol, coalesce_tol)
    geometric = align.intersections == align.projections
    grad_norm = float(np.linalg.norm(grad_f_det(data, align.q)))
    gradient = grad_norm < grad_tol
    if geometric == gradient:
        return geometric
    if grad_tol * 1e-2 <= grad_norm <= grad_tol * 1e2:
        return geometric
    raise InconsistentStationarityTests(
        f"geometric test says {geometric}, gradient norm is {grad_norm:.3e}"
    )


def stationary_value(spectrum: SpectrumEnumeration, profile: MultiplicityProfile) -> float:
    """Closed-form objective value  Σ 2 m(X, i) ln ς_i  at a stationary point."""
    if len(profile.counts) != spectrum.size:
        raise ProfileSumMismatch(
            f"profile has {len(profile.counts)} entries for {spectrum.size} distinct values"
        )
    if profile.total != profile.p:
        raise ProfileSumMismatch(
            f"profile sums to {profile.total}, expected p = {profile.p}"
        )
    return float(
        sum(2.0 * m * math.log(v) for m, v in zip(profile.counts, spectrum.values))
    )


def classify(data: DataMatrix, x, rank_tol: float = DEFAULT_RANK_TOL,
             grad_tol: float = DEFAULT_GRAD_TOL,
             coalesce_tol: float = DEFAULT_COALESCE_TOL) -> StationaryClass:
    """Taxonomy of a candidate point under the determinant objective.

    Stationary points classify as GLOBAL_MAX when the profile matches the
    leading multiplicities, GLOBAL_MIN when the data matrix has full column
    rank and the profile matches the trailing multiplicities, and SADDLE
    otherwise; everything else is NOT_STATIONARY.
    """
    align = _alignment(data, x, rank_tol, coalesce_tol)
    profile = MultiplicityProfile(align.intersections, align.q.shape[1])
    stationary = is_stationary(data, x, grad_tol, rank_tol, coalesce_tol)
    if not stationary:
        return StationaryClass(NOT_STATIONARY, profile, None)
    spectrum = align.spectrum
    p = profile.p
    value = stationary_value(spectrum, profile)
    leading = tuple(leading_multiplicity(spectrum, i, p) for i in range(1, spectrum.size + 1))
    if profile.counts == leading:
        return StationaryClass(GLOBAL_MAX, profile, value)
    if spectrum.rank == data.n:
        trailing = tuple(
            trailing_multiplicity(spectrum, i, p) for i in range(1, spectrum.size + 1)
        )
        if profile.counts == trailing:
            return StationaryClass(GLOBAL_MIN, profile, value)
    return StationaryClass(SADDLE, profile, value)


@dataclass(frozen=True)
class SaddleCurve:
    """One rotation curve X(theta) through a saddle with known curvature.

    ``curvature`` is the closed-form second derivative of
    phi(theta) = f_det(X(theta)) at theta = 0:
    2 (sigma_mix^2 - sigma_col^2) / sigma_col^2.
    """

    base: np.ndarray  # orthonormal basis of range(X), column to rotate included
    mix_direction: np.ndarray  # unit vector rotated into the chosen column
    column: int
    sigma_column: float
    sigma_mix: float

    @property
    def curvature(self) -> float:
        return 2.0 * (self.sigma_mix**2 - self.sigma_column**2) / self.sigma_column**2

    def evaluate(self, theta: float) -> np.ndarray:
        x = self.base.copy()
        x[:, self.column] = (
            math.cos(theta) * self.base[:, self.column]
            + math.sin(theta) * self.mix_direction
        )
        return x


def saddle_probe(data: DataMatrix, x, rank_tol: float = DEFAULT_RANK_TOL,
                 grad_tol: float = DEFAULT_GRAD_TOL,
                 coalesce_tol: float = DEFAULT_COALESCE_TOL) -> tuple[SaddleCurve, SaddleCurve]:
    """Ascent and descent curves through a saddle point.

    The descent curve rotates the loading column carrying the largest
    singular value toward an unused singular direction with a strictly
    smaller value (phi''(0) < 0); the ascent curve rotates the column
    carrying the smallest value toward an unused direction with a strictly
    larger one (phi''(0) > 0).  When the data matrix is column-rank
    deficient, the descent direction may come from the nullspace of A
    (sigma = 0).  Returns (ascent, descent).
    """
    verdict = classify(data, x, rank_tol, grad_tol, coalesce_tol)
    if verdict.verdict != SADDLE:
        raise NotASaddle(f"point classifies as {verdict.verdict}")
    align = _alignment(data, x, rank_tol, coalesce_tol)
    spectrum = align.spectrum
    counts = align.intersections

    # Orthonormal basis of range(X) grouped by distinct value, descending.
    blocks, complements = [], []
    for vi, u, c in zip(align.bases, align.rotations, counts):
        blocks.append(vi @ u[:, :c])
        complements.append(vi @ u[:, c:])
    base = np.hstack([b for b in blocks if b.shape[1] > 0])
    occupied = [i for i, c in enumerate(counts) if c > 0]
    i_top, i_bot = occupied[0], occupied[-1]

    deficient = [
        i for i in range(spectrum.size) if counts[i] < spectrum.multiplicities[i]
    ]
    eta_candidates = [i for i in deficient if i > i_top]
    mu_candidates = [i for i in deficient if i < i_bot]
    if not mu_candidates:
        raise NotASaddle("no unused direction with a larger singular value")

    i_mu = min(mu_candidates)
    ascent = SaddleCurve(
        base=base,
        mix_direction=complements[i_mu][:, 0],
        column=base.shape[1] - 1,
        sigma_column=spectrum.values[i_bot],
        sigma_mix=spectrum.values[i_mu],
    )
    if eta_candidates:
        i_eta = max(eta_candidates)
        mix, sigma_eta = complements[i_eta][:, 0], spectrum.values[i_eta]
    elif spectrum.rank < data.n:
        mix, sigma_eta = _null_direction(data, align), 0.0
    else:
        raise NotASaddle("no unused direction with a smaller singular value")
    descent = SaddleCurve(
        base=base,
        mix_direction=mix,
        column=0,
        sigma_column=spectrum.values[i_top],
        sigma_mix=sigma_eta,
    )
    return ascent, descent


def _null_direction(data: DataMatrix, align: _Alignment) -> np.ndarray:
    """A unit right-null vector of A (exists when rank < n)."""
    _, _, vt = np.linalg.svd(data.a, full_matrices=True)
    return vt[data.rank]


def recover_svd(data: DataMatrix, x_opt) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-p SVD of A from a (near-)global maximizer of the determinant model.

    Orthonormalizes ``x_opt`` to Xq, factors the small matrix A @ Xq
    (m x p, so O(m p^2) work), and rotates: V_p = Xq @ V-tilde.  Returns
    (U_p, singular values, V_p).  The caller is responsible for ``x_opt``
    actually spanning the leading subspace; the singular values are only as
    good as that subspace.
    """
    q = thin_qr(_loading_array(x_opt))[0]
    svd = thin_svd(data.a @ q)
    if svd.rank < q.shape[1]:
        raise RankDeficientProjection("rank(A X) < p")
    return svd.left, svd.singular_values, q @ svd.right


def format_classification_report(result: StationaryClass, grad_norm: float | None = None,
                                 curvatures: tuple | None = None) -> str:
    """Structured-text classification report."""
    lines = [f"verdict: {result.verdict}"]
    lines.append("profile: " + " ".join(str(c) for c in result.profile.counts))
    if result.value is not None:
        lines.append(f"stationary-value: {result.value:.12g}")
    if grad_norm is not None:
        lines.append(f"gradient-norm: {grad_norm:.6g}")
    if curvatures is not None:
        ascending, descending = curvatures
        lines.append(f"ascent-curvature: {ascending:.12g}")
        lines.append(f"descent-curvature: {descending:.12g}")
    return "\n".join(lines)
