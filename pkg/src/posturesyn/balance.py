"""Center-of-pressure computation from plate wrenches and sway metrics.

Plate frame: x antero-posterior (forward positive), y medio-lateral. COP in
mm. Samples with vertical load below the threshold are flagged invalid and
excluded from metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_LOAD_THRESHOLD_N = 20.0


class CopError(ValueError):
    pass


@dataclass(frozen=True)
class CopTrace:
    """COP positions (mm) with per-sample validity and vertical load (N)."""

    t: np.ndarray
    xy: np.ndarray
    valid: np.ndarray
    fz: np.ndarray

    def __post_init__(self):
        if np.any(~np.isfinite(self.xy[self.valid])):
            raise CopError("non-finite COP at a valid sample")


@dataclass(frozen=True)
class CopMetrics:
    total_excursion_mm: float
    rms_cop_mm: float
    rms_cop_velocity_mm_s: float
    max_ap_displacement_mm: float
    max_ml_displacement_mm: float


def cop_from_wrench(
    t: np.ndarray,
    fx: np.ndarray,
    fy: np.ndarray,
    fz: np.ndarray,
    mx: np.ndarray,
    my: np.ndarray,
    plate_origin_mm=(0.0, 0.0),
    load_threshold_N: float = DEFAULT_LOAD_THRESHOLD_N,
) -> CopTrace:
    """COP from a plate wrench: x = -My/Fz, y = Mx/Fz (meters -> mm).

    Forces in N, moments in N*m about the plate origin.
    """
    t = np.asarray(t, dtype=float)
    fz = np.asarray(fz, dtype=float)
    mx = np.asarray(mx, dtype=float)
    my = np.asarray(my, dtype=float)
    valid = fz >= load_threshold_N
    if not valid.any():
        raise CopError("all samples below the load threshold")
    xy = np.full((t.size, 2), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        xy[:, 0] = -my / fz * 1000.0 + plate_origin_mm[0]
        xy[:, 1] = mx / fz * 1000.0 + plate_origin_mm[1]
    xy[~valid] = np.nan
    return CopTrace(t=t, xy=xy, valid=valid, fz=fz)


def net_cop(left: CopTrace, right: CopTrace) -> CopTrace:
    """Load-weighted average of two plate COPs on a shared time grid.

    A sample is valid if at least one plate carries load there; with one
    loaded plate the net COP equals that plate's COP.
    """
    if left.t.shape != right.t.shape or np.any(left.t != right.t):
        raise CopError("plate traces are not on the same time grid")
    both_invalid = ~left.valid & ~right.valid
    valid = ~both_invalid
    if not valid.any():
        raise CopError("no sample has a loaded plate")
    wl = np.where(left.valid, left.fz, 0.0)
    wr = np.where(right.valid, right.fz, 0.0)
    total = wl + wr
    xy = np.full_like(left.xy, np.nan)
    lxy = np.where(left.valid[:, None], left.xy, 0.0)
    rxy = np.where(right.valid[:, None], right.xy, 0.0)
    with np.errstate(invalid="ignore"):
        xy[valid] = (
            (wl[valid, None] * lxy[valid] + wr[valid, None] * rxy[valid])
            / total[valid, None]
        )
    return CopTrace(t=left.t, xy=xy, valid=valid, fz=total)


def cop_metrics(trace: CopTrace) -> CopMetrics:
    """Sway metrics over the valid samples of a trace.

    Excursion sums segment lengths between consecutive valid samples; RMS
    distance and per-axis maxima are measured about the trace mean.
    """
    idx = np.flatnonzero(trace.valid)
    if idx.size < 2:
        raise CopError(f"need >= 2 valid samples, got {idx.size}")
    xy = trace.xy[idx]
    t = trace.t[idx]
    deltas = np.diff(xy, axis=0)
    seg = np.hypot(deltas[:, 0], deltas[:, 1])
    dt = np.diff(t)
    center = xy.mean(axis=0)
    dev = xy - center
    return CopMetrics(
        total_excursion_mm=float(seg.sum()),
        rms_cop_mm=float(np.sqrt((dev**2).sum(axis=1).mean())),
        rms_cop_velocity_mm_s=float(np.sqrt(((seg / dt) ** 2).mean())),
        max_ap_displacement_mm=float(np.abs(dev[:, 0]).max()),
        max_ml_displacement_mm=float(np.abs(dev[:, 1]).max()),
    )
