"""Domain types shared across the analysis pipeline and the simulator.

All types are immutable after construction/loading and safe to share across
threads. Validation lives next to the type it protects; file parsing lives
in :mod:`posturesyn.io`.

Conventions
-----------
* Plate/world frame: x = antero-posterior (forward positive),
  y = medio-lateral (subject's left positive). Pelvic and COP positions in mm.
* EMG in mV, forces in N, moments in N*m, times in seconds on one shared clock.
* Channel order is fixed: channels 0-6 are the dominant side, 7-13 the
  non-dominant side, each in muscle order TA, LG, RF, BF, GM, ABD, ES.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Trial timing contract: the perturbation onset falls in a 0-0.8 s window
# after the task onset, and the whole trial fits a 3 s window. Streams must
# start at least 0.2 s before task onset. TIME_TOL_S absorbs one-sample
# rounding from resampled streams.
ONSET_WINDOW_S = 0.8
TRIAL_WINDOW_S = 3.0
PRE_ROLL_S = 0.2
TIME_TOL_S = 0.05

N_CHANNELS = 14
N_MUSCLES_PER_SIDE = 7


class Muscle(Enum):
    TA = "TA"
    LG = "LG"
    RF = "RF"
    BF = "BF"
    GM = "GM"
    ABD = "ABD"
    ES = "ES"


class Side(Enum):
    DOMINANT = "dominant"
    NONDOMINANT = "nondominant"


class Direction(Enum):
    """Perturbation direction after handedness remapping."""

    FORWARD = "forward"
    BACKWARD = "backward"
    DOMINANT = "dominant"
    NONDOMINANT = "nondominant"


class RawDirection(Enum):
    """Direction labels as commanded by the rig (before remapping)."""

    FORWARD = "forward"
    BACKWARD = "backward"
    LEFT = "left"
    RIGHT = "right"


class Handedness(Enum):
    LEFT = "left"
    RIGHT = "right"


class Group(Enum):
    FF = "FF"
    NOFF = "NoFF"


class Bin(Enum):
    BK = "bk"
    APR1 = "apr1"
    APR2 = "apr2"
    APR3 = "apr3"
    VPR1 = "vpr1"
    VPR2 = "vpr2"
    VPR3 = "vpr3"


class Phase(Enum):
    APR = "APR"
    VPR = "VPR"


PHASE_BINS = {
    Phase.APR: (Bin.BK, Bin.APR1, Bin.APR2, Bin.APR3),
    Phase.VPR: (Bin.BK, Bin.VPR1, Bin.VPR2, Bin.VPR3),
}

DIRECTIONS = (
    Direction.FORWARD,
    Direction.BACKWARD,
    Direction.DOMINANT,
    Direction.NONDOMINANT,
)


def map_direction(raw: RawDirection, handedness: Handedness) -> Direction:
    """Remap rig left/right labels to dominant/non-dominant sides."""
    if raw is RawDirection.FORWARD:
        return Direction.FORWARD
    if raw is RawDirection.BACKWARD:
        return Direction.BACKWARD
    dominant_raw = (
        RawDirection.RIGHT if handedness is Handedness.RIGHT else RawDirection.LEFT
    )
    return Direction.DOMINANT if raw is dominant_raw else Direction.NONDOMINANT


@dataclass(frozen=True)
class MuscleChannel:
    """One surface-EMG channel: a (side, muscle) pair with a fixed index."""

    index: int
    side: Side
    muscle: Muscle

    def label(self) -> str:
        prefix = "D" if self.side is Side.DOMINANT else "N"
        return f"{prefix}{self.muscle.value}"


def default_channels() -> tuple[MuscleChannel, ...]:
    """The canonical 14-channel layout (dominant side first)."""
    channels = []
    for s_i, side in enumerate((Side.DOMINANT, Side.NONDOMINANT)):
        for m_i, muscle in enumerate(Muscle):
            channels.append(MuscleChannel(s_i * N_MUSCLES_PER_SIDE + m_i, side, muscle))
    return tuple(channels)


DEFAULT_CHANNELS = default_channels()


class ValidationError(ValueError):
    """A record violates the dataset contract."""


@dataclass(frozen=True)
class Stream:
    """A timestamped sample block; ``values`` is (n_samples, n_cols)."""

    t: np.ndarray
    values: np.ndarray
    rate_hz: float

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or t.size != v.shape[0]:
            raise ValidationError("stream timestamps and samples disagree in length")
        if t.size >= 2 and not np.all(np.diff(t) > 0):
            raise ValidationError("stream timestamps must be strictly increasing")
        if not np.isfinite(self.rate_hz) or self.rate_hz <= 0:
            raise ValidationError("stream sampling rate must be positive")

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def covers(self, t0: float, t1: float, tol: float = TIME_TOL_S) -> bool:
        return self.t_start <= t0 + tol and self.t_end >= t1 - tol


@dataclass(frozen=True)
class TrialOutcome:
    caught: bool
    thrown: bool
    score: int

    def __post_init__(self):
        if not 0 <= int(self.score) <= 10:
            raise ValidationError(f"score {self.score} outside 0..10")


@dataclass(frozen=True)
class TrialRecording:
    """One catch-and-throw trial: synchronized EMG, plates, pelvic marker.

    ``emg.values`` is (n, 14) in channel order; ``plates`` holds one stream
    per plate with columns (fx, fy, fz, mx, my, mz); ``pelvis.values`` is
    (n, 2) in mm.
    """

    trial_id: int
    subject_id: str
    group: Group
    session: int
    direction: Direction
    raw_direction: RawDirection
    emg: Stream
    plates: tuple[Stream, Stream]
    pelvis: Stream
    t_vr_onset: float
    t_robust_onset: float
    t_end: float
    outcome: TrialOutcome
    valid: bool = True

    def __post_init__(self):
        if self.emg.values.shape[1] != N_CHANNELS:
            raise ValidationError(
                f"trial {self.trial_id}: expected {N_CHANNELS} EMG channels, "
                f"got {self.emg.values.shape[1]}"
            )
        if not (
            self.t_vr_onset - 1e-9
            <= self.t_robust_onset
            <= self.t_vr_onset + ONSET_WINDOW_S + 1e-9
        ):
            raise ValidationError(
                f"trial {self.trial_id}: perturbation onset "
                f"{self.t_robust_onset - self.t_vr_onset:.3f} s after task onset "
                f"violates the [0, {ONSET_WINDOW_S}] s window"
            )
        if self.t_end - self.t_vr_onset > TRIAL_WINDOW_S + TIME_TOL_S:
            raise ValidationError(
                f"trial {self.trial_id}: duration "
                f"{self.t_end - self.t_vr_onset:.3f} s exceeds "
                f"{TRIAL_WINDOW_S} s window"
            )
        if self.t_end <= self.t_robust_onset:
            raise ValidationError(f"trial {self.trial_id}: t_end precedes onset")
        t0 = self.t_vr_onset - PRE_ROLL_S
        for name, stream in (
            ("emg", self.emg),
            ("plate0", self.plates[0]),
            ("plate1", self.plates[1]),
            ("pelvis", self.pelvis),
        ):
            if not stream.covers(t0, self.t_end):
                raise ValidationError(
                    f"trial {self.trial_id}: {name} stream "
                    f"[{stream.t_start:.3f}, {stream.t_end:.3f}] does not cover "
                    f"[{t0:.3f}, {self.t_end:.3f}]"
                )


@dataclass(frozen=True)
class Subject:
    subject_id: str
    group: Group
    handedness: Handedness
    body_weight_N: float
    perturbation_threshold_N: dict[RawDirection, float]
    trials: tuple[TrialRecording, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.body_weight_N <= 0:
            raise ValidationError(f"{self.subject_id}: body weight must be positive")


@dataclass(frozen=True)
class Cohort:
    """All subjects of a study, with per-trial validity retained."""

    name: str
    subjects: tuple[Subject, ...]
    partial: bool = False
    trials_per_session: int = 50
    sessions_per_subject: int = 2

    def __post_init__(self):
        if self.partial:
            return
        for subject in self.subjects:
            counts: dict[int, int] = {}
            for trial in subject.trials:
                counts[trial.session] = counts.get(trial.session, 0) + 1
            if len(counts) != self.sessions_per_subject or any(
                c != self.trials_per_session for c in counts.values()
            ):
                raise ValidationError(
                    f"{subject.subject_id}: expected {self.sessions_per_subject} "
                    f"sessions x {self.trials_per_session} trials "
                    f"(got {sorted(counts.items())}); flag the manifest as partial "
                    "if trials were dropped"
                )

    def group_subjects(self, group: Group) -> tuple[Subject, ...]:
        return tuple(s for s in self.subjects if s.group is group)

    def all_trials(self) -> list[tuple[Subject, TrialRecording]]:
        return [(s, t) for s in self.subjects for t in s.trials]
