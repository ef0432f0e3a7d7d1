"""Cohort file formats: per-trial CSV streams plus a JSON manifest.

Formats are plain and language-neutral:

* EMG CSV        header ``t_s,ch00..ch13`` (seconds, millivolts)
* plate CSV      header ``t_s,fx,fy,fz,mx,my,mz,plate_id`` (N, N*m)
* pelvis CSV     header ``t_s,x_mm,y_mm``
* manifest JSON  subject metadata, trial file paths, event times, outcomes

Floats are serialized with ``repr`` so save -> load round-trips bitwise.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .types import (
    N_CHANNELS,
    Cohort,
    Group,
    Handedness,
    RawDirection,
    Stream,
    Subject,
    TrialOutcome,
    TrialRecording,
    ValidationError,
    map_direction,
)

EMG_HEADER = ["t_s"] + [f"ch{i:02d}" for i in range(N_CHANNELS)]
PLATE_HEADER = ["t_s", "fx", "fy", "fz", "mx", "my", "mz", "plate_id"]
PELVIS_HEADER = ["t_s", "x_mm", "y_mm"]


class ManifestError(ValidationError):
    """Manifest or referenced trial files are malformed."""


@dataclass(frozen=True)
class ResampledStream:
    """Output of :func:`resample_to_grid`; ``truncated`` flags a clipped request."""

    t: np.ndarray
    values: np.ndarray
    rate_hz: float
    truncated: bool


def resample_to_grid(
    t: np.ndarray,
    values: np.ndarray,
    rate_hz: float,
    t_stop: float | None = None,
) -> ResampledStream:
    """Linearly interpolate samples onto a uniform grid anchored at ``t[0]``.

    The grid never extends beyond the last input timestamp; a request past it
    is truncated and flagged rather than extrapolated.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("need at least 2 timestamped samples to resample")
    if not np.all(np.diff(t) > 0):
        raise ValueError("timestamps must be strictly increasing")
    if rate_hz <= 0:
        raise ValueError("rate must be positive")

    truncated = False
    if t_stop is None:
        t_stop = float(t[-1])
    elif t_stop > t[-1]:
        t_stop = float(t[-1])
        truncated = True

    n = int(np.floor((t_stop - t[0]) * rate_hz + 1e-9)) + 1
    grid = t[0] + np.arange(n) / rate_hz

    one_d = values.ndim == 1
    cols = values if not one_d else values[:, None]
    out = np.empty((n, cols.shape[1]))
    for j in range(cols.shape[1]):
        out[:, j] = np.interp(grid, t, cols[:, j])
    return ResampledStream(grid, out[:, 0] if one_d else out, rate_hz, truncated)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _read_csv(path: Path, expected_header: list[str]) -> np.ndarray:
    if not path.exists():
        raise ManifestError(f"missing file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected_header:
            raise ManifestError(
                f"{path}: header {header} != expected {expected_header}"
            )
        data = [[float(cell) for cell in row] for row in reader if row]
    if not data:
        raise ManifestError(f"{path}: no samples")
    return np.asarray(data)


def write_emg_csv(path: Path, stream: Stream) -> None:
    rows = (
        [_fmt(t)] + [_fmt(v) for v in row]
        for t, row in zip(stream.t, stream.values)
    )
    _write_csv(path, EMG_HEADER, rows)


def write_plates_csv(path: Path, plates: tuple[Stream, Stream]) -> None:
    def rows():
        for plate_id, stream in enumerate(plates):
            for t, row in zip(stream.t, stream.values):
                yield [_fmt(t)] + [_fmt(v) for v in row] + [str(plate_id)]

    _write_csv(path, PLATE_HEADER, rows())


def write_pelvis_csv(path: Path, stream: Stream) -> None:
    rows = (
        [_fmt(t), _fmt(x), _fmt(y)]
        for t, (x, y) in zip(stream.t, stream.values)
    )
    _write_csv(path, PELVIS_HEADER, rows)


def read_emg_csv(path: Path, rate_hz: float) -> Stream:
    data = _read_csv(path, EMG_HEADER)
    return Stream(data[:, 0], data[:, 1:], rate_hz)


def read_plates_csv(path: Path, rate_hz: float) -> tuple[Stream, Stream]:
    data = _read_csv(path, PLATE_HEADER)
    streams = []
    for plate_id in (0, 1):
        block = data[data[:, 7] == plate_id]
        if block.size == 0:
            raise ManifestError(f"{path}: plate {plate_id} has no samples")
        streams.append(Stream(block[:, 0], block[:, 1:7], rate_hz))
    return streams[0], streams[1]


def read_pelvis_csv(path: Path, rate_hz: float) -> Stream:
    data = _read_csv(path, PELVIS_HEADER)
    return Stream(data[:, 0], data[:, 1:3], rate_hz)


def _require(entry: dict, key: str, where: str):
    if key not in entry:
        raise ManifestError(f"{where}: missing required field '{key}'")
    return entry[key]


def load_cohort(manifest_path: str | Path) -> Cohort:
    """Load and fully validate a cohort from its JSON manifest."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise ManifestError(f"missing manifest: {manifest_path}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    base = manifest_path.parent

    subjects = []
    for subj in _require(manifest, "subjects", "manifest"):
        sid = _require(subj, "subject_id", "subject")
        handedness = Handedness(_require(subj, "handedness", sid))
        thresholds = {
            RawDirection(k): float(v)
            for k, v in _require(subj, "perturbation_threshold_N", sid).items()
        }
        trials = []
        for entry in subj.get("trials", []):
            where = f"{sid}/trial {entry.get('trial_id', '?')}"
            for key in ("rate_emg_hz", "rate_plate_hz", "rate_marker_hz"):
                _require(entry, key, where)
            raw_dir = RawDirection(_require(entry, "direction", where))
            emg = read_emg_csv(base / entry["emg_csv"], float(entry["rate_emg_hz"]))
            plates = read_plates_csv(
                base / entry["plates_csv"], float(entry["rate_plate_hz"])
            )
            pelvis = read_pelvis_csv(
                base / entry["pelvis_csv"], float(entry["rate_marker_hz"])
            )
            outcome = TrialOutcome(
                bool(entry["outcome"]["caught"]),
                bool(entry["outcome"]["thrown"]),
                int(entry["outcome"]["score"]),
            )
            trials.append(
                TrialRecording(
                    trial_id=int(entry["trial_id"]),
                    subject_id=sid,
                    group=Group(subj["group"]),
                    session=int(entry.get("session", 1)),
                    direction=map_direction(raw_dir, handedness),
                    raw_direction=raw_dir,
                    emg=emg,
                    plates=plates,
                    pelvis=pelvis,
                    t_vr_onset=float(_require(entry, "t_vr_onset_s", where)),
                    t_robust_onset=float(_require(entry, "t_robust_onset_s", where)),
                    t_end=float(_require(entry, "t_end_s", where)),
                    outcome=outcome,
                    valid=bool(entry.get("valid", True)),
                )
            )
        subjects.append(
            Subject(
                subject_id=sid,
                group=Group(subj["group"]),
                handedness=handedness,
                body_weight_N=float(_require(subj, "body_weight_N", sid)),
                perturbation_threshold_N=thresholds,
                trials=tuple(trials),
            )
        )

    return Cohort(
        name=manifest.get("cohort", manifest_path.stem),
        subjects=tuple(subjects),
        partial=bool(manifest.get("partial", False)),
        trials_per_session=int(manifest.get("trials_per_session", 50)),
        sessions_per_subject=int(manifest.get("sessions_per_subject", 2)),
    )


def save_cohort(cohort: Cohort, out_dir: str | Path, extra_meta: dict | None = None) -> Path:
    """Write a cohort to ``out_dir`` and return the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "cohort": cohort.name,
        "partial": cohort.partial,
        "trials_per_session": cohort.trials_per_session,
        "sessions_per_subject": cohort.sessions_per_subject,
        "subjects": [],
    }
    if extra_meta:
        manifest.update(extra_meta)

    for subject in cohort.subjects:
        entry = {
            "subject_id": subject.subject_id,
            "group": subject.group.value,
            "handedness": subject.handedness.value,
            "body_weight_N": subject.body_weight_N,
            "perturbation_threshold_N": {
                d.value: f for d, f in sorted(
                    subject.perturbation_threshold_N.items(), key=lambda kv: kv[0].value
                )
            },
            "trials": [],
        }
        for trial in subject.trials:
            stem = f"{subject.subject_id}/trial_{trial.trial_id:04d}"
            emg_rel = f"{stem}_emg.csv"
            plates_rel = f"{stem}_plates.csv"
            pelvis_rel = f"{stem}_pelvis.csv"
            write_emg_csv(out_dir / emg_rel, trial.emg)
            write_plates_csv(out_dir / plates_rel, trial.plates)
            write_pelvis_csv(out_dir / pelvis_rel, trial.pelvis)
            entry["trials"].append(
                {
                    "trial_id": trial.trial_id,
                    "session": trial.session,
                    "direction": trial.raw_direction.value,
                    "valid": trial.valid,
                    "rate_emg_hz": trial.emg.rate_hz,
                    "rate_plate_hz": trial.plates[0].rate_hz,
                    "rate_marker_hz": trial.pelvis.rate_hz,
                    "t_vr_onset_s": trial.t_vr_onset,
                    "t_robust_onset_s": trial.t_robust_onset,
                    "t_end_s": trial.t_end,
                    "outcome": {
                        "caught": trial.outcome.caught,
                        "thrown": trial.outcome.thrown,
                        "score": trial.outcome.score,
                    },
                    "emg_csv": emg_rel,
                    "plates_csv": plates_rel,
                    "pelvis_csv": pelvis_rel,
                }
            )
        manifest["subjects"].append(entry)

    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path
