"""Time-binning of trial envelopes into the seven 75 ms analysis bins.

Fixed bins (relative to perturbation onset): BK covers the 75 ms before
onset; APR1/2/3 cover 100-175, 175-250 and 250-325 ms after onset; VPR1
covers 325-400 ms. VPR2 is centered on the per-channel envelope peak found
after 400 ms, VPR3 on the first fall below 5% of that peak. Window
membership is half-open [start, end) so boundary samples count once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .types import (
    DEFAULT_CHANNELS,
    DIRECTIONS,
    N_CHANNELS,
    PHASE_BINS,
    Bin,
    Direction,
    MuscleChannel,
    Phase,
    ValidationError,
)

BIN_WIDTH_S = 0.075
HALF_WIDTH_S = BIN_WIDTH_S / 2.0
VPR_SEARCH_START_S = 0.400  # after onset; end of VPR1, so VPR1/VPR2 cannot coincide
PEAK_OFFSET_FRACTION = 0.05

# fixed (start, end) offsets from perturbation onset, seconds
FIXED_BIN_OFFSETS = {
    Bin.BK: (-BIN_WIDTH_S, 0.0),
    Bin.APR1: (0.100, 0.175),
    Bin.APR2: (0.175, 0.250),
    Bin.APR3: (0.250, 0.325),
    Bin.VPR1: (0.325, 0.400),
}


class DeadChannelError(ValidationError):
    """A muscle channel carries no signal anywhere (cannot normalize)."""


class EmptyWindowError(ValidationError):
    """A bin window contains no samples."""


@dataclass(frozen=True)
class Window:
    """One averaging window; ``clamped`` marks clipping to the trial extent."""

    start: float
    end: float
    center: float
    clamped: bool = False
    valid: bool = True

    @property
    def width(self) -> float:
        return self.end - self.start


def fixed_windows(t_onset: float) -> dict[Bin, Window]:
    out = {}
    for b, (lo, hi) in FIXED_BIN_OFFSETS.items():
        out[b] = Window(t_onset + lo, t_onset + hi, t_onset + (lo + hi) / 2.0)
    return out


def _clip_window(center: float, t_lo: float, t_hi: float, valid: bool = True) -> Window:
    start, end = center - HALF_WIDTH_S, center + HALF_WIDTH_S
    clamped = start < t_lo or end > t_hi
    return Window(max(start, t_lo), min(end, t_hi), center, clamped=clamped, valid=valid)


def find_vpr_windows(
    t: np.ndarray, env: np.ndarray, t_onset: float, t_end: float
) -> tuple[Window, Window]:
    """Locate the data-driven VPR2/VPR3 windows for one channel.

    VPR2 centers on the envelope maximum over [onset + 0.4 s, t_end] (ties
    broken by earliest sample); VPR3 on the first sample after the peak that
    drops below 5% of it. If the envelope never drops that low the VPR3
    window is clamped to end at ``t_end``. A flat-zero search region yields
    invalid windows.
    """
    t = np.asarray(t, dtype=float)
    env = np.asarray(env, dtype=float)
    search_lo = t_onset + VPR_SEARCH_START_S
    mask = (t >= search_lo) & (t <= t_end)
    if not mask.any():
        raise ValidationError(
            f"envelope does not cover the VPR search window "
            f"[{search_lo:.3f}, {t_end:.3f}]"
        )
    idx = np.flatnonzero(mask)
    seg = env[idx]
    peak_local = int(np.argmax(seg))
    peak_value = float(seg[peak_local])
    if peak_value <= 0.0:
        dead = Window(np.nan, np.nan, np.nan, valid=False)
        return dead, dead

    peak_idx = idx[peak_local]
    vpr2 = _clip_window(float(t[peak_idx]), float(t[0]), t_end)

    threshold = PEAK_OFFSET_FRACTION * peak_value
    after = np.flatnonzero((t > t[peak_idx]) & (t <= t_end) & (env < threshold))
    if after.size:
        vpr3 = _clip_window(float(t[after[0]]), float(t[0]), t_end)
    else:
        center = t_end - HALF_WIDTH_S
        vpr3 = Window(t_end - BIN_WIDTH_S, t_end, center, clamped=True)
    return vpr2, vpr3


def bin_average(t: np.ndarray, x: np.ndarray, window: Window) -> float:
    """Mean of samples whose timestamps fall in [start, end)."""
    if not window.valid:
        return np.nan
    t = np.asarray(t, dtype=float)
    mask = (t >= window.start) & (t < window.end)
    if not mask.any():
        raise EmptyWindowError(
            f"no samples in window [{window.start:.4f}, {window.end:.4f})"
        )
    return float(np.asarray(x, dtype=float)[mask].mean())


def normalize_per_muscle(values: np.ndarray, channels=DEFAULT_CHANNELS) -> np.ndarray:
    """Scale each muscle row by its own maximum so the max maps to exactly 1."""
    values = np.asarray(values, dtype=float)
    finite = np.where(np.isfinite(values), values, 0.0)
    row_max = finite.max(axis=-1)
    for i, m in enumerate(row_max):
        if not m > 0.0:
            label = channels[i].label() if i < len(channels) else f"ch{i:02d}"
            raise DeadChannelError(
                f"channel {i} ({label}): no positive activity; cannot normalize"
            )
    return values / row_max[:, None]


@dataclass(frozen=True)
class TrialBins:
    """Per-trial bin means: values is (14, 7) in the order of ``Bin``."""

    values: np.ndarray
    direction: Direction
    subject_id: str
    windows: dict[Bin, tuple[Window, ...]] = field(repr=False, default_factory=dict)


def bin_trial(
    t: np.ndarray,
    envelopes: np.ndarray,
    t_onset: float,
    t_end: float,
    direction: Direction,
    subject_id: str = "",
) -> TrialBins:
    """Average one trial's (14, n) envelopes into the seven bins.

    VPR2/VPR3 are searched per channel; the fixed bins share one window.
    """
    envelopes = np.asarray(envelopes, dtype=float)
    if envelopes.ndim != 2 or envelopes.shape[0] != N_CHANNELS:
        raise ValueError(f"expected ({N_CHANNELS}, n) envelopes, got {envelopes.shape}")
    fixed = fixed_windows(t_onset)
    values = np.empty((N_CHANNELS, len(Bin)))
    windows: dict[Bin, list[Window]] = {b: [] for b in Bin}
    for ch in range(N_CHANNELS):
        vpr2, vpr3 = find_vpr_windows(t, envelopes[ch], t_onset, t_end)
        per_channel = dict(fixed)
        per_channel[Bin.VPR2] = vpr2
        per_channel[Bin.VPR3] = vpr3
        for b_i, b in enumerate(Bin):
            values[ch, b_i] = bin_average(t, envelopes[ch], per_channel[b])
            windows[b].append(per_channel[b])
    return TrialBins(
        values=values,
        direction=direction,
        subject_id=subject_id,
        windows={b: tuple(w) for b, w in windows.items()},
    )


@dataclass(frozen=True)
class BinnedActivationMatrix:
    """Muscles x (bin, direction) matrix of normalized mean activations.

    ``values[i, j]`` is the trial-averaged, per-muscle-normalized activation
    of channel i in the cell ``columns[j]``. Columns are ordered bins-major,
    directions-minor. ``trial_counts[j]`` is the number of trials averaged
    into column j.
    """

    values: np.ndarray
    channels: tuple[MuscleChannel, ...]
    columns: tuple[tuple[Bin, Direction], ...]
    trial_counts: np.ndarray
    phase: Phase | None = None
    subject_id: str | None = None


def assemble_matrix(
    trial_bins: list[TrialBins],
    phase: Phase | None = None,
    subject_id: str | None = None,
    normalize: bool = True,
) -> BinnedActivationMatrix:
    """Average per-trial bins into the cell matrix and normalize per muscle.

    With ``phase`` set, only that phase's four bins are kept (BK plus the
    three APR or VPR bins); normalization always uses the full 7 x 4 grid so
    APR and VPR slices of one subject share a scale.
    """
    if not trial_bins:
        raise ValidationError("no trials to assemble")
    bins = tuple(Bin)
    cells = np.zeros((N_CHANNELS, len(bins), len(DIRECTIONS)))
    counts = np.zeros((len(bins), len(DIRECTIONS)), dtype=int)
    dir_index = {d: j for j, d in enumerate(DIRECTIONS)}

    for tb in trial_bins:
        j = dir_index[tb.direction]
        for b_i in range(len(bins)):
            v = tb.values[:, b_i]
            if np.all(np.isfinite(v)):
                cells[:, b_i, j] += v
                counts[b_i, j] += 1

    missing = [
        (bins[b_i].value, DIRECTIONS[j].value)
        for b_i in range(len(bins))
        for j in range(len(DIRECTIONS))
        if counts[b_i, j] == 0
    ]
    if missing:
        raise ValidationError(f"cells with zero valid trials: {missing}")

    cells /= counts[None, :, :]
    full = cells.reshape(N_CHANNELS, -1)  # bins-major, directions-minor
    if normalize:
        full = normalize_per_muscle(full)

    all_columns = tuple((b, d) for b in bins for d in DIRECTIONS)
    flat_counts = counts.reshape(-1)
    if phase is None:
        keep = np.arange(len(all_columns))
    else:
        phase_bins = set(PHASE_BINS[phase])
        keep = np.asarray(
            [k for k, (b, _) in enumerate(all_columns) if b in phase_bins]
        )
    return BinnedActivationMatrix(
        values=full[:, keep],
        channels=DEFAULT_CHANNELS,
        columns=tuple(all_columns[k] for k in keep),
        trial_counts=flat_counts[keep],
        phase=phase,
        subject_id=subject_id,
    )


def pool_matrices(matrices: list[BinnedActivationMatrix]) -> tuple[np.ndarray, list]:
    """Concatenate subject matrices column-wise for pooled factorization.

    Returns the pooled (14, 16*S) array and column labels
    ``(subject_id, bin, direction)``.
    """
    if not matrices:
        raise ValidationError("no matrices to pool")
    values = np.concatenate([m.values for m in matrices], axis=1)
    labels = [
        (m.subject_id, b, d) for m in matrices for (b, d) in m.columns
    ]
    return values, labels
