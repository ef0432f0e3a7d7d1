"""Single-trial simulation: perturbation, assist field, VR catch-and-throw.

Timeline (seconds, stream clock): streams start at t = 0; the task onset is
at t = 0.2 (the pre-roll); the perturbation pulse starts 0-0.8 s after task
onset; the ball arrives ``approach_distance / ball_speed`` after task onset;
throwing happens ``aim_time`` after a successful catch and the trial ends
when the thrown ball reaches the target (or when the 3 s window expires).

The catch/throw outcome model is a deterministic reach policy whose success
degrades with pelvic excursion and speed. It exists so outcome statistics
are generable and is explicitly non-physiological.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..types import (
    PRE_ROLL_S,
    Group,
    Handedness,
    RawDirection,
    Stream,
    TrialOutcome,
    TrialRecording,
    map_direction,
)
from .body import DIRECTION_UNITS, MAX_DT_S, BodyState, step_body
from .boundary import BalanceBoundary, assistive_force
from .rig import GRAVITY, RigModel, cable_tensions
from ..geometry import distance_to_polygon


@dataclass(frozen=True)
class VrTaskParams:
    """Geometry and timing of the virtual catch-and-throw task."""

    ball_speed_m_s: float = 0.30
    uncertainty_radius_m: float = 0.10
    target_distance_m: float = 5.0
    approach_distance_m: float = 0.45
    window_s: float = 3.0
    aim_time_s: float = 0.4
    throw_speed_m_s: float = 6.0
    target_ring_radius_m: float = 0.5


@dataclass(frozen=True)
class HandPolicy:
    """Deterministic, non-physiological catch/throw success model."""

    catch_excursion_limit_mm: float = 30.0
    base_miss_m: float = 0.02
    offset_penalty: float = 0.8  # per m of ball offset
    excursion_penalty_per_mm: float = 0.012
    speed_penalty_s: float = 1.0  # per m/s of pelvic speed at throw


@dataclass(frozen=True)
class TrialScript:
    """Everything that varies between trials."""

    direction: RawDirection
    perturbation_force_N: float
    t_perturb_onset_s: float
    perturbation_duration_s: float = 0.15
    ff_enabled: bool = False
    seed: int = 0
    arm_disturbance_N: float = 25.0
    initial_offset_m: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not 0.0 <= self.t_perturb_onset_s <= 0.8:
            raise ValueError(
                f"perturbation onset {self.t_perturb_onset_s} outside [0, 0.8] s"
            )


@dataclass(frozen=True)
class TrialTruth:
    """Simulator-side ground truth kept beside the recorded streams."""

    max_pelvic_excursion_mm: float
    stepping: bool
    assist_impulse_N_s: float
    cop_path_mm: float
    pelvic_trace_mm: np.ndarray = field(repr=False)
    cop_trace_mm: np.ndarray = field(repr=False)
    envelopes: np.ndarray = field(repr=False)
    emg_t: np.ndarray = field(repr=False)
    energy_trace_J: np.ndarray = field(repr=False)


def vr_score(hit_radius_fraction: float) -> int:
    """Ring score: bullseye 10, decreasing linearly to 0 at the target edge."""
    if hit_radius_fraction < 0:
        raise ValueError("hit radius cannot be negative")
    if hit_radius_fraction >= 1.0:
        return 0
    return int(10 - math.floor(10.0 * hit_radius_fraction))


def _default_emg_synth(t: np.ndarray, events: dict, direction: RawDirection, rng) -> np.ndarray:
    """Fallback envelope model: background plus perturbation/catch bumps."""
    env = np.full((14, t.size), 0.05)
    pulse = (t >= events["t_perturb"]) & (t < events["t_perturb"] + 0.3)
    env[:, pulse] += 0.5
    catch = np.exp(-(((t - events["t_catch"]) / 0.15) ** 2))
    env += 0.4 * catch[None, :]
    return env


def run_trial(
    rig: RigModel,
    script: TrialScript,
    boundary: BalanceBoundary | None = None,
    vr: VrTaskParams = VrTaskParams(),
    policy: HandPolicy = HandPolicy(),
    dt: float = 0.001,
    rate_emg_hz: float = 2000.0,
    rate_marker_hz: float = 100.0,
    emg_synth=None,
    trial_id: int = 1,
    subject_id: str = "sim",
    session: int = 1,
    group: Group | None = None,
    handedness: Handedness = Handedness.RIGHT,
) -> tuple[TrialRecording, TrialTruth]:
    """Simulate one trial and emit it in the cohort's stream formats."""
    if dt > MAX_DT_S:
        raise ValueError(f"dt={dt} exceeds {MAX_DT_S}")
    if script.ff_enabled and boundary is None:
        raise ValueError("ff_enabled trial needs a balance boundary")

    body = rig.body
    t_vr = PRE_ROLL_S
    t_perturb = t_vr + script.t_perturb_onset_s
    t_catch = t_vr + vr.approach_distance_m / vr.ball_speed_m_s
    n_steps = int(round((t_vr + vr.window_s) / dt))

    ss = np.random.SeedSequence(script.seed)
    rng_task, rng_emg = [np.random.default_rng(c) for c in ss.spawn(2)]

    # ball offset: uniform in a disc of the uncertainty radius
    r = vr.uncertainty_radius_m * math.sqrt(rng_task.random())
    phi = 2.0 * math.pi * rng_task.random()
    ball_offset = (r * math.cos(phi), r * math.sin(phi))

    # one reach disturbance direction per arm action, fixed per trial
    arm_angles = 2.0 * math.pi * rng_task.random(2)
    arm_windows = [
        (t_catch - 0.2, t_catch, arm_angles[0]),
        (t_catch + vr.aim_time_s - 0.2, t_catch + vr.aim_time_s, arm_angles[1]),
    ]

    unit = DIRECTION_UNITS[script.direction.value]
    pulse_force = (
        unit[0] * script.perturbation_force_N,
        unit[1] * script.perturbation_force_N,
    )
    if script.perturbation_force_N > 0:
        # validates feasibility against the cable cone and tension cap
        cable_tensions(rig, (0.0, 0.0), pulse_force, belt="trunk")

    inner_radius_mm = (
        distance_to_polygon(boundary.origin, boundary.polygon) if boundary else 0.0
    )

    state = BodyState(script.initial_offset_m[0], script.initial_offset_m[1], 0.0, 0.0)
    t_grid = np.arange(n_steps + 1) * dt
    pelvic_mm = np.empty((n_steps + 1, 2))
    cop_mm = np.empty((n_steps + 1, 2))
    energy = np.empty(n_steps + 1)
    pelvic_mm[0] = (state.qx * 1000.0, state.qy * 1000.0)
    k_eff = body.ankle_kp_N_per_m  # COP of the initial state
    cop0 = (
        k_eff * state.qx * body.com_height_m / (body.mass_kg * GRAVITY),
        k_eff * state.qy * body.com_height_m / (body.mass_kg * GRAVITY),
    )
    cop_mm[0] = (cop0[0] * 1000.0, cop0[1] * 1000.0)
    energy[0] = state.energy(body)

    stepping = False
    assist_impulse = 0.0
    apply_ff = script.ff_enabled and boundary is not None
    gain = rig.force_field_gain_N_per_m
    sat = rig.force_field_saturation_N

    for k in range(n_steps):
        t = k * dt
        fx = fy = 0.0
        if t_perturb <= t < t_perturb + script.perturbation_duration_s:
            fx += pulse_force[0]
            fy += pulse_force[1]
        if script.arm_disturbance_N > 0.0:
            for w0, w1, ang in arm_windows:
                if w0 <= t < w1:
                    shape = math.sin(math.pi * (t - w0) / (w1 - w0)) ** 2
                    fx += script.arm_disturbance_N * shape * math.cos(ang)
                    fy += script.arm_disturbance_N * shape * math.sin(ang)
        if apply_ff:
            px, py = state.qx * 1000.0, state.qy * 1000.0
            if math.hypot(px - boundary.origin[0], py - boundary.origin[1]) > inner_radius_mm:
                fa = assistive_force(boundary, (px, py), gain, sat)
                fx += fa[0]
                fy += fa[1]
                assist_impulse += math.hypot(fa[0], fa[1]) * dt

        state, cop, step_event = step_body(body, state, (fx, fy), dt)
        stepping = stepping or step_event
        pelvic_mm[k + 1] = (state.qx * 1000.0, state.qy * 1000.0)
        cop_mm[k + 1] = (cop[0] * 1000.0, cop[1] * 1000.0)
        energy[k + 1] = state.energy(body)

    excursions = np.hypot(pelvic_mm[:, 0], pelvic_mm[:, 1])

    # outcome policy
    k_catch = int(round(t_catch / dt))
    caught = (
        not stepping
        and excursions[: k_catch + 1].max() <= policy.catch_excursion_limit_mm
    )
    t_throw = t_catch + vr.aim_time_s
    k_throw = int(round(t_throw / dt))
    thrown = caught and not stepping
    if thrown:
        v_throw = (
            math.hypot(
                pelvic_mm[min(k_throw + 1, n_steps), 0] - pelvic_mm[k_throw - 1, 0],
                pelvic_mm[min(k_throw + 1, n_steps), 1] - pelvic_mm[k_throw - 1, 1],
            )
            / (2 * dt)
            / 1000.0
        )
        miss_m = (
            policy.base_miss_m
            + policy.offset_penalty * math.hypot(*ball_offset)
            + policy.excursion_penalty_per_mm * excursions.max()
            + policy.speed_penalty_s * v_throw
        )
        score = vr_score(miss_m / vr.target_ring_radius_m)
        t_hit = t_throw + vr.target_distance_m / vr.throw_speed_m_s
        t_end = min(t_hit, t_vr + vr.window_s)
    else:
        score = 0
        t_end = t_vr + vr.window_s

    # assemble streams clipped to the trial end
    sim_keep = t_grid <= t_end + 1e-9
    t_sim = t_grid[sim_keep]

    events = {"t_vr": t_vr, "t_perturb": t_perturb, "t_catch": t_catch,
              "t_throw": t_throw, "t_end": t_end}
    n_emg = int(math.floor(t_end * rate_emg_hz)) + 1
    t_emg = np.arange(n_emg) / rate_emg_hz
    synth = emg_synth if emg_synth is not None else _default_emg_synth
    envelopes = synth(t_emg, events, script.direction, rng_emg)
    carrier = _bandpass_carrier(envelopes.shape, rate_emg_hz, rng_emg)
    emg_raw = 0.5 * envelopes * carrier  # mV scale

    plates = _plate_streams(t_sim, pelvic_mm[sim_keep], cop_mm[sim_keep], body, dt)
    marker_step = max(1, int(round(1.0 / (rate_marker_hz * dt))))
    marker_idx = np.arange(0, t_sim.size, marker_step)

    recording = TrialRecording(
        trial_id=trial_id,
        subject_id=subject_id,
        group=group if group is not None else (Group.FF if script.ff_enabled else Group.NOFF),
        session=session,
        direction=map_direction(script.direction, handedness),
        raw_direction=script.direction,
        emg=Stream(t_emg, emg_raw.T, rate_emg_hz),
        plates=plates,
        pelvis=Stream(t_sim[marker_idx], pelvic_mm[sim_keep][marker_idx], rate_marker_hz),
        t_vr_onset=t_vr,
        t_robust_onset=t_perturb,
        t_end=float(t_end),
        outcome=TrialOutcome(caught=caught, thrown=thrown, score=score),
        valid=not stepping,
    )
    cop_deltas = np.diff(cop_mm[sim_keep], axis=0)
    truth = TrialTruth(
        max_pelvic_excursion_mm=float(excursions.max()),
        stepping=stepping,
        assist_impulse_N_s=assist_impulse,
        cop_path_mm=float(np.hypot(cop_deltas[:, 0], cop_deltas[:, 1]).sum()),
        pelvic_trace_mm=pelvic_mm[sim_keep],
        cop_trace_mm=cop_mm[sim_keep],
        envelopes=envelopes,
        emg_t=t_emg,
        energy_trace_J=energy[sim_keep],
    )
    return recording, truth


def _bandpass_carrier(shape: tuple, rate_hz: float, rng) -> np.ndarray:
    """Unit-RMS broadband carrier in the 20-300 Hz band."""
    from scipy import signal

    noise = rng.standard_normal(shape)
    sos = signal.butter(4, [20.0, 300.0], btype="bandpass", output="sos", fs=rate_hz)
    carrier = signal.sosfiltfilt(sos, noise, axis=-1)
    rms = np.sqrt((carrier**2).mean(axis=-1, keepdims=True))
    return carrier / np.maximum(rms, 1e-12)


def _plate_streams(
    t: np.ndarray,
    pelvic_mm: np.ndarray,
    cop_mm: np.ndarray,
    body,
    dt: float,
) -> tuple[Stream, Stream]:
    """Two plate wrenches consistent with the body model's net COP.

    Feet sit at y = +/- support_half_ml; vertical load follows the lever
    rule so the load-weighted plate COPs reproduce the model COP. Moments
    are taken about the lab origin.
    """
    mg = body.mass_kg * GRAVITY
    d_mm = body.support_half_ml_m * 1000.0
    y_c = np.clip(cop_mm[:, 1], -d_mm, d_mm)
    fz0 = mg * (d_mm + y_c) / (2 * d_mm)  # left plate (y = +d)
    fz1 = mg * (d_mm - y_c) / (2 * d_mm)

    # horizontal reaction proxy: ankle shear, split by load share
    f_ank = -(body.ankle_kp_N_per_m * pelvic_mm / 1000.0)
    share0 = (fz0 / mg)[:, None]
    share1 = (fz1 / mg)[:, None]

    streams = []
    for fz, share, y_plate in ((fz0, share0, d_mm), (fz1, share1, -d_mm)):
        cop_x_m = cop_mm[:, 0] / 1000.0
        mx = fz * (y_plate / 1000.0)
        my = -fz * cop_x_m
        cols = np.column_stack(
            [share[:, 0] * f_ank[:, 0], share[:, 0] * f_ank[:, 1], fz,
             mx, my, np.zeros_like(fz)]
        )
        streams.append(Stream(t, cols, 1.0 / dt))
    return streams[0], streams[1]
