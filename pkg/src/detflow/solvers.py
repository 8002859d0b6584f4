"""Six iterative ascent algorithms over the trace and determinant models.

Variants
--------
det-flow       steepest ascent on f_det with constant step 1/Lambda, where
               Lambda is a sampled Lipschitz estimate of the gradient;
det-LS         steepest ascent on f_det with a Wolfe line search;
trace-flow     steepest ascent on f_trace with a Wolfe line search; the
               direction and the stopping test use the gradient projected
               onto the Stiefel tangent space, which is the quantity that
               vanishes at the constrained optimum (the raw Euclidean
               gradient of f_trace does not);
acc-det-flow   nonlinear acceleration: K+1 constant-step updates, residual
               extrapolation, extrapolated update applied with xi = 1;
acc-det-LS     same, with xi chosen by the Wolfe search;
acc-det-BT     same, with the extrapolation regularization chosen from a
               grid by the best resulting f_det.

All variants replace each accepted iterate by the Q factor of its thin QR
(f_det is exactly invariant under this, f_trace is not; line-search variants
therefore re-check monotonicity after reorthogonalization and shrink the
step if needed).  One "iteration" is one accepted update: for accelerated
variants the K+1 inner updates are part of that iteration's cost, matching
how their per-iteration expense is usually accounted.

A single run is strictly sequential; distinct runs share only the immutable
DataMatrix and may execute concurrently, each owning its own seeded stream.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    LineSearchFailed,
    NotPositiveDefinite,
    RankDeficient,
    RankDeficientProjection,
    SingularSystem,
    ZeroProjection,
)
from .linalg import thin_qr
from .metrics import principal_angle
from .objective import (
    DataMatrix,
    LoadingMatrix,
    det_value_and_grad,
    f_det,
    f_trace,
    grad_f_det,
    grad_f_trace,
    trace_value_and_grad,
)
from .randgen import haar_stiefel

__all__ = [
    "DET_FLOW",
    "DET_LS",
    "TRACE_FLOW",
    "ACC_DET_FLOW",
    "ACC_DET_LS",
    "ACC_DET_BT",
    "ALL_VARIANTS",
    "GRAD_BELOW_EPSILON",
    "MAX_ITERS",
    "NUMERICAL_FAILURE",
    "SolverConfig",
    "IterateRecord",
    "SolverResult",
    "estimate_lipschitz",
    "steepest_ascent_step",
    "wolfe_search",
    "rna_extrapolate",
    "run",
]

DET_FLOW = "det-flow"
DET_LS = "det-LS"
TRACE_FLOW = "trace-flow"
ACC_DET_FLOW = "acc-det-flow"
ACC_DET_LS = "acc-det-LS"
ACC_DET_BT = "acc-det-BT"
ALL_VARIANTS = (DET_FLOW, DET_LS, TRACE_FLOW, ACC_DET_FLOW, ACC_DET_LS, ACC_DET_BT)

GRAD_BELOW_EPSILON = "grad-below-epsilon"
MAX_ITERS = "max-iters"
NUMERICAL_FAILURE = "numerical-failure"

# Ascent slopes below this are indistinguishable from float noise.
_SLOPE_FLOOR = 1e-26
# Absolute slack allowed by the monotone re-check after reorthogonalization.
_MONOTONE_SLACK = 1e-13

_RECOVERABLE = (RankDeficient, RankDeficientProjection, NotPositiveDefinite, ZeroProjection)


@dataclass(frozen=True)
class SolverConfig:
    """Algorithm variant plus tolerances.  Defaults follow standard practice
    where the underlying method leaves them open (Wolfe constants, sampling
    counts, regularization grid)."""

    variant: str = DET_FLOW
    epsilon: float = 1e-6
    max_iters: int = 100_000
    window: int = 4  # acceleration window K
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    lipschitz_samples: int = 20
    reorthogonalize: bool = True
    lambda_grid: tuple = (1e-1, 1e-3, 1e-5, 1e-7, 1e-9, 0.0)
    rna_lambda: float = 1e-9  # regularization for acc-det-flow / acc-det-LS
    seed: int = 0  # per-run random stream (Lipschitz sampling)

    def __post_init__(self):
        if self.variant not in ALL_VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ValueError("need 0 < wolfe_c1 < wolfe_c2 < 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.window < 1:
            raise ValueError("acceleration window must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.lipschitz_samples < 2:
            raise ValueError("lipschitz_samples must be >= 2")


@dataclass(frozen=True)
class IterateRecord:
    iter: int
    elapsed_seconds: float
    f_value: float
    grad_norm: float
    principal_angle: float | None = None


@dataclass
class SolverResult:
    x_final: LoadingMatrix
    converged: bool
    trace: list = field(default_factory=list)
    total_iters: int = 0
    termination: str = MAX_ITERS


def estimate_lipschitz(data: DataMatrix, p: int, samples: int = 20, seed=0) -> float:
    """Sampled Lipschitz estimate of grad f_det over orthonormal loadings.

    Draws ``samples`` independent Haar pairs (X, Y), takes the largest ratio
    ||grad(X) - grad(Y)||_F / ||X - Y||_F, and multiplies by a safety factor
    of 2.  Deterministic given the seed.  Degenerate draws (rank-deficient
    projection) are resampled up to ten times before the error propagates.
    """
    if samples < 2:
        raise ValueError("need at least two sample pairs")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        for attempt in range(10):
            x = haar_stiefel(data.n, p, rng)
            y = haar_stiefel(data.n, p, rng)
            try:
                gx = grad_f_det(data, x)
                gy = grad_f_det(data, y)
            except RankDeficientProjection:
                if attempt == 9:
                    raise
                continue
            break
        denom = float(np.linalg.norm(x - y))
        if denom > 0:
            worst = max(worst, float(np.linalg.norm(gx - gy)) / denom)
    return 2.0 * worst


def steepest_ascent_step(x, grad, eta: float, reorthogonalize: bool = True) -> np.ndarray:
    """X + eta * grad, followed by thin-QR reorthogonalization when enabled."""
    if eta <= 0:
        raise ValueError("step length must be positive")
    y = np.asarray(x, dtype=float) + eta * np.asarray(grad, dtype=float)
    if reorthogonalize:
        return thin_qr(y)[0]
    return y


def _directional(grad_fn, x, direction, eta):
    return float(np.sum(grad_fn(x + eta * direction) * direction))


def wolfe_search(f, grad, x, direction, c1: float = 1e-4, c2: float = 0.9,
                 max_trials: int = 50, initial: float = 1.0) -> float:
    """Step length satisfying the ascent Wolfe conditions.

    Sufficient increase  f(x + eta d) >= f(x) + c1 eta <grad(x), d>  and
    curvature  <grad(x + eta d), d> <= c2 <grad(x), d>.  Bracketing from
    eta = ``initial`` with expansion factor 2, then bisection zoom; the
    budget counts objective evaluations.  Trial points where the objective
    is degenerate (rank-deficient) are rejected and the interval shrunk.

    Raises
    ------
    ValueError
        If ``direction`` is not an ascent direction at ``x``.
    LineSearchFailed
        After ``max_trials`` objective evaluations without acceptance.
    """
    x = np.asarray(x, dtype=float)
    direction = np.asarray(direction, dtype=float)
    phi0 = f(x)
    dphi0 = float(np.sum(grad(x) * direction))
    if not dphi0 > _SLOPE_FLOOR:
        raise ValueError(f"not an ascent direction (slope {dphi0:.3e})")

    trials = 0

    def phi(eta):
        nonlocal trials
        trials += 1
        return f(x + eta * direction)

    def zoom(lo, phi_lo, hi):
        nonlocal trials
        while trials < max_trials:
            eta = 0.5 * (lo + hi)
            if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
                break
            try:
                phi_eta = phi(eta)
            except _RECOVERABLE:
                hi = eta
                continue
            if phi_eta < phi0 + c1 * eta * dphi0 or phi_eta <= phi_lo:
                hi = eta
                continue
            try:
                dphi_eta = _directional(grad, x, direction, eta)
            except _RECOVERABLE:
                hi = eta
                continue
            if dphi_eta <= c2 * dphi0:
                return eta
            if dphi_eta * (hi - lo) <= 0:
                hi = lo
            lo, phi_lo = eta, phi_eta
        raise LineSearchFailed(f"no Wolfe step within {max_trials} trials")

    prev, phi_prev = 0.0, phi0
    eta = initial
    while trials < max_trials:
        try:
            phi_eta = phi(eta)
        except _RECOVERABLE:
            eta = 0.5 * (prev + eta)
            continue
        if phi_eta < phi0 + c1 * eta * dphi0 or (prev > 0.0 and phi_eta <= phi_prev):
            return zoom(prev, phi_prev, eta)
        try:
            dphi_eta = _directional(grad, x, direction, eta)
        except _RECOVERABLE:
            eta = 0.5 * (prev + eta)
            continue
        if dphi_eta <= c2 * dphi0:
            return eta
        prev, phi_prev = eta, phi_eta
        eta *= 2.0
    raise LineSearchFailed(f"no Wolfe step within {max_trials} trials")


def rna_extrapolate(iterates, lam: float) -> np.ndarray:
    """Regularized nonlinear acceleration over K+2 consecutive iterates.

    Flattens the iterates to vectors x_0..x_{K+1}, forms the residual
    matrix R with columns x_{j+1} - x_j, and finds the combination
    c (summing to one) that minimizes c' (R'R + lam ||R'R|| I) c.  For a
    nonsingular system this is exactly c = z / (1'z) with
    (R'R + lam ||R'R|| I) z = 1; the constrained least-squares form also
    covers the rank-deficient case (collinear residuals), where the plain
    normal solve breaks down but the extrapolation is still well defined.
    Returns Delta = sum_j c_j x_j - x_0, reshaped to matrix form.

    Raises
    ------
    SingularSystem
        When the weights are not determined (for the nonsingular system
        this is the 1'z = 0 case); the caller falls back to the plain
        constant-step update.
    """
    if len(iterates) < 3:
        raise ValueError("need at least K+2 = 3 iterates")
    if lam < 0:
        raise ValueError("regularization must be nonnegative")
    shape = np.shape(iterates[0])
    xs = np.stack([np.asarray(m, dtype=float).ravel() for m in iterates])
    residuals = np.diff(xs, axis=0)  # rows r_j = x_{j+1} - x_j
    k1 = residuals.shape[0]  # K + 1 weights
    gram = residuals @ residuals.T
    scale = float(np.linalg.norm(gram, 2))
    if scale == 0.0:
        coeff = np.full(k1, 1.0 / k1)
    else:
        m = gram + lam * scale * np.eye(k1)
        kkt = np.zeros((k1 + 1, k1 + 1))
        kkt[:k1, :k1] = m
        kkt[:k1, k1] = 1.0
        kkt[k1, :k1] = 1.0
        rhs = np.zeros(k1 + 1)
        rhs[k1] = 1.0
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
        if not np.all(np.isfinite(sol)):
            raise SingularSystem("extrapolation weights are not finite")
        if np.linalg.norm(kkt @ sol - rhs) > 1e-8 * (1.0 + np.linalg.norm(sol)):
            raise SingularSystem("extrapolation system is inconsistent")
        coeff = sol[:k1]
    delta = coeff @ xs[:k1] - xs[0]
    return delta.reshape(shape)


def _stiefel_project(x: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Remove the component of the gradient normal to the Stiefel manifold."""
    xtg = x.T @ grad
    return grad - x @ (0.5 * (xtg + xtg.T))


def run(data: DataMatrix, x0, config: SolverConfig, ground_truth=None) -> SolverResult:
    """Run one solver variant from ``x0`` until the gradient norm falls
    below ``config.epsilon`` or the iteration budget is exhausted.

    ``ground_truth``, when given, must be an orthonormal basis of the true
    leading subspace; the per-iterate principal angle is then recorded.
    Precondition failures at the starting point raise; rank degeneracies
    arising later terminate the run with NUMERICAL_FAILURE.
    """
    x = x0.x.copy() if isinstance(x0, LoadingMatrix) else np.array(x0, dtype=float)
    p = x.shape[1]
    is_trace = config.variant == TRACE_FLOW

    def retract(y):
        return thin_qr(y)[0] if config.reorthogonalize else y

    if config.reorthogonalize:
        x = retract(x)

    def objective(z):
        return f_trace(data, z) if is_trace else f_det(data, z)

    def gradient(z):
        return grad_f_trace(data, z) if is_trace else grad_f_det(data, z)

    def evaluate(z):
        if is_trace:
            value, g = trace_value_and_grad(data, z)
            d = _stiefel_project(z, g)
        else:
            value, g = det_value_and_grad(data, z)
            d = g
        return value, g, d, float(np.linalg.norm(d))

    eta_cache: dict = {}

    def const_eta():
        if "eta" not in eta_cache:
            lam = estimate_lipschitz(data, p, config.lipschitz_samples, config.seed)
            # Degenerate guard: isotropic data gives Lambda ~ 0.
            eta_cache["eta"] = 1.0 / lam if lam > 1e-12 else 1.0
        return eta_cache["eta"]

    def monotone_accept(z, direction, eta, f_prev):
        """Retract z + eta * direction, shrinking eta until the objective is
        not decreased (f_det is QR-invariant so the first candidate wins;
        f_trace may lose a little to the R factor)."""
        cand = None
        for _ in range(45):
            try:
                cand = retract(z + eta * direction)
                f_cand = objective(cand)
            except _RECOVERABLE:
                eta *= 0.5
                continue
            if f_cand >= f_prev - _MONOTONE_SLACK:
                return cand
            eta *= 0.5
        if cand is None:
            raise RankDeficient("no admissible step along the search direction")
        return cand

    def wolfe_step(z, f_value, direction):
        try:
            eta = wolfe_search(objective, gradient, z, direction,
                               config.wolfe_c1, config.wolfe_c2)
        except (LineSearchFailed, ValueError):
            eta = const_eta()
        return monotone_accept(z, direction, eta, f_value)

    def inner_window(z):
        """K+1 constant-step updates from z (not reorthogonalized)."""
        eta = const_eta()
        ys = [z]
        y = z
        for _ in range(config.window + 1):
            y = y + eta * gradient(y)
            ys.append(y)
        return ys

    def plain_step(z):
        return retract(z + const_eta() * gradient(z))

    def acc_step(z, f_value, g):
        try:
            ys = inner_window(z)
        except _RECOVERABLE:
            return plain_step(z)
        if config.variant == ACC_DET_BT:
            best = None
            for lam in config.lambda_grid:
                try:
                    cand = retract(z + rna_extrapolate(ys, lam))
                    f_cand = objective(cand)
                except (SingularSystem, *_RECOVERABLE):
                    continue
                if best is None or f_cand > best[0]:
                    best = (f_cand, cand)
            if best is not None:
                return best[1]
            return retract(ys[1])
        try:
            delta = rna_extrapolate(ys, config.rna_lambda)
        except SingularSystem:
            return retract(ys[1])
        if config.variant == ACC_DET_LS:
            slope = float(np.sum(g * delta))
            if slope > _SLOPE_FLOOR:
                return wolfe_step(z, f_value, delta)
            return wolfe_step(z, f_value, g)
        try:
            return retract(z + delta)
        except _RECOVERABLE:
            return retract(ys[1])

    trace_records: list[IterateRecord] = []
    start = time.perf_counter()

    def record(it, z, f_value, grad_norm):
        angle = None if ground_truth is None else principal_angle(ground_truth, z)
        trace_records.append(
            IterateRecord(it, time.perf_counter() - start, f_value, grad_norm, angle)
        )

    # Starting-point degeneracy is a precondition violation and propagates.
    f_value, g, d, grad_norm = evaluate(x)
    record(0, x, f_value, grad_norm)

    it = 0
    failed = False
    while grad_norm >= config.epsilon and it < config.max_iters:
        try:
            if config.variant == DET_FLOW:
                x_new = steepest_ascent_step(x, d, const_eta(), config.reorthogonalize)
            elif config.variant in (DET_LS, TRACE_FLOW):
                x_new = wolfe_step(x, f_value, d)
            else:
                x_new = acc_step(x, f_value, g)
            f_value, g, d, grad_norm = evaluate(x_new)
        except _RECOVERABLE:
            failed = True
            break
        x = x_new
        it += 1
        record(it, x, f_value, grad_norm)

    if failed:
        termination = NUMERICAL_FAILURE
    elif grad_norm < config.epsilon:
        termination = GRAD_BELOW_EPSILON
    else:
        termination = MAX_ITERS
    return SolverResult(
        x_final=LoadingMatrix(x),
        converged=termination == GRAD_BELOW_EPSILON,
        trace=trace_records,
        total_iters=it,
        termination=termination,
    )
