"""Error and performance measurement for benchmark runs."""

import math
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, thin_qr

__all__ = [
    "BenchRecord",
    "SummaryRow",
    "principal_angle",
    "summarize",
    "format_summary_table",
]


def principal_angle(v_p, x_hat) -> float:
    """Largest principal angle between range(v_p) and range(x_hat), radians.

    Computed as arcsin(||V V' Q - Q||_2) after orthonormalizing ``x_hat``
    to Q by thin QR; the spectral norm is clamped into [0, 1] because
    floating point can push it marginally above 1.

    ``v_p`` must already have orthonormal columns (to 1e-10).
    """
    v = as_matrix(v_p, "subspace basis")
    p = v.shape[1]
    defect = np.linalg.norm(v.T @ v - np.eye(p))
    if defect > 1e-10 * max(1.0, math.sqrt(p)):
        raise ValueError(f"subspace basis is not orthonormal (defect {defect:.3e})")
    q = thin_qr(x_hat)[0]
    residual = v @ (v.T @ q) - q
    s = np.linalg.svd(residual, compute_uv=False)[0]
    return float(np.arcsin(np.clip(s, 0.0, 1.0)))


@dataclass
class BenchRecord:
    """One (algorithm, instance) run: trace plus end-of-run figures."""

    algorithm: str
    instance: str
    trace: list
    final_angle: float
    wall_time: float

    def __post_init__(self):
        if not 0.0 <= self.final_angle <= math.pi / 2 + 1e-12:
            raise ValueError(f"final angle {self.final_angle} outside [0, pi/2]")


@dataclass
class SummaryRow:
    algorithm: str
    runs: int
    iters_to_target: int | None
    seconds_to_target: float  # inf when the target was never reached
    final_angle: float


def _time_to_target(record: BenchRecord, target: float):
    for rec in record.trace:
        if rec.principal_angle is not None and rec.principal_angle <= target:
            return rec.iter, rec.elapsed_seconds
    return None, math.inf


def summarize(records, target_angle: float) -> list[SummaryRow]:
    """Per-algorithm summary, ordered by algorithm name.

    When several records share an algorithm (one per instance), the
    worst case over records is reported: max iterations/seconds to the
    target (inf if any run never reached it) and max final angle.
    """
    if not records:
        raise ValueError("summarize needs at least one record")
    by_algorithm: dict[str, list[BenchRecord]] = {}
    for rec in records:
        by_algorithm.setdefault(rec.algorithm, []).append(rec)
    rows = []
    for name in sorted(by_algorithm):
        group = by_algorithm[name]
        iters, seconds = [], []
        for rec in group:
            it, sec = _time_to_target(rec, target_angle)
            iters.append(it)
            seconds.append(sec)
        unreached = any(it is None for it in iters)
        rows.append(
            SummaryRow(
                algorithm=name,
                runs=len(group),
                iters_to_target=None if unreached else max(iters),
                seconds_to_target=math.inf if unreached else max(seconds),
                final_angle=max(rec.final_angle for rec in group),
            )
        )
    return rows


def format_summary_table(rows, target_angle: float, failures=()) -> str:
    """Render summary rows as aligned text; inf renders as 'unreached'."""
    header = f"{'algorithm':<16} {'runs':>4} {'iters-to-target':>16} {'secs-to-target':>15} {'final-angle':>12}"
    lines = [f"target angle: {target_angle:g}", header, "-" * len(header)]
    for row in rows:
        iters = "unreached" if row.iters_to_target is None else str(row.iters_to_target)
        secs = "unreached" if math.isinf(row.seconds_to_target) else f"{row.seconds_to_target:.3f}"
        lines.append(
            f"{row.algorithm:<16} {row.runs:>4} {iters:>16} {secs:>15} {row.final_angle:>12.3e}"
        )
    for failure in failures:
        lines.append(f"FAILED  {failure}")
    return "\n".join(lines)
