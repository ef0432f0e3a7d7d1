"""Damped planar inverted-pendulum plant and the threshold calibration loop.

The plant is an *effective* pendulum: a point mass at height h whose ankle
applies a restoring horizontal-force equivalent ``kp*q + kd*v``. The ankle
torque maps to a center-of-pressure demand ``(kp*q + kd*v) * h / (m*g)``
per axis; a stepping event fires when that demand exits the foot-support
rectangle (the exposed COP is the demand clipped to the rectangle).
Parameters are tuned so pulse thresholds land in the calibration protocol's
range; they are control proxies, not anthropometric values.

With kd = 0 the COP response to a constant force rises monotonically to its
steady state, so the stepping threshold has the closed form
``F* = (m g L / h) * (kp - m g / h) / kp`` (see
:meth:`BodyParams.static_tipping_force_N`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rig import GRAVITY, BodyParams, InfeasibleForceError, RigModel, cable_tensions

MAX_DT_S = 0.002

DIRECTION_UNITS = {
    "forward": (1.0, 0.0),
    "backward": (-1.0, 0.0),
    "left": (0.0, 1.0),
    "right": (0.0, -1.0),
}


@dataclass
class BodyState:
    """COM horizontal offset (m) and velocity (m/s) in the world frame."""

    qx: float = 0.0
    qy: float = 0.0
    vx: float = 0.0
    vy: float = 0.0

    def energy(self, body: BodyParams) -> float:
        """Mechanical energy of the closed-loop plant (kinetic + net spring)."""
        k_eff = body.ankle_kp_N_per_m - body.gravity_stiffness()
        return 0.5 * body.mass_kg * (self.vx**2 + self.vy**2) + 0.5 * k_eff * (
            self.qx**2 + self.qy**2
        )


def step_body(
    body: BodyParams,
    state: BodyState,
    force_N: tuple[float, float],
    dt: float,
) -> tuple[BodyState, tuple[float, float], bool]:
    """Advance one semi-implicit Euler step.

    Returns (new state, exposed COP in m, stepping event flag). Forces are
    horizontal, applied at COM height.
    """
    if dt > MAX_DT_S:
        raise ValueError(f"dt={dt} s exceeds {MAX_DT_S} s")
    kg = body.gravity_stiffness()
    m = body.mass_kg
    cop_scale = body.com_height_m / (m * GRAVITY)

    f_ank_x = body.ankle_kp_N_per_m * state.qx + body.ankle_kd_N_s_per_m * state.vx
    f_ank_y = body.ankle_kp_N_per_m * state.qy + body.ankle_kd_N_s_per_m * state.vy
    cop_x = f_ank_x * cop_scale
    cop_y = f_ank_y * cop_scale
    stepping = (
        abs(cop_x) > body.support_half_ap_m or abs(cop_y) > body.support_half_ml_m
    )
    cop = (
        min(max(cop_x, -body.support_half_ap_m), body.support_half_ap_m),
        min(max(cop_y, -body.support_half_ml_m), body.support_half_ml_m),
    )

    ax = (kg * state.qx + force_N[0] - f_ank_x - body.damping_N_s_per_m * state.vx) / m
    ay = (kg * state.qy + force_N[1] - f_ank_y - body.damping_N_s_per_m * state.vy) / m
    vx = state.vx + ax * dt
    vy = state.vy + ay * dt
    new = BodyState(state.qx + vx * dt, state.qy + vy * dt, vx, vy)
    if not all(np.isfinite(v) for v in (new.qx, new.qy, new.vx, new.vy)):
        raise FloatingPointError("body state diverged")
    return new, cop, stepping


@dataclass(frozen=True)
class PulseResponse:
    """Outcome of one calibration pulse."""

    stepped: bool
    max_excursion_m: float
    excursion_trace_m: np.ndarray  # (n, 2) COM offsets


def simulate_pulse(
    body: BodyParams,
    force_N: tuple[float, float],
    pulse_duration_s: float,
    settle_s: float = 3.0,
    dt: float = 0.001,
) -> PulseResponse:
    """Apply a rectangular force pulse from rest and watch for stepping."""
    n_steps = int(round((pulse_duration_s + settle_s) / dt))
    state = BodyState()
    trace = np.empty((n_steps, 2))
    stepped = False
    for k in range(n_steps):
        t = k * dt
        f = force_N if t < pulse_duration_s else (0.0, 0.0)
        state, _, step_event = step_body(body, state, f, dt)
        stepped = stepped or step_event
        trace[k, 0] = state.qx
        trace[k, 1] = state.qy
    max_exc = float(np.hypot(trace[:, 0], trace[:, 1]).max())
    return PulseResponse(stepped, max_exc, trace)


@dataclass(frozen=True)
class CalibrationResult:
    direction: str
    threshold_N: float
    fraction_of_bw: float
    flag: str  # "", "fell_at_start", "cap_reached"
    excursion_points_m: np.ndarray  # union of non-stepping excursion samples


def calibrate_threshold(
    rig: RigModel,
    direction: str,
    start_fraction: float = 0.40,
    increment: float = 0.01,
    max_fraction: float = 1.0,
    pulse_duration_s: float = 2.0,
    settle_s: float = 3.0,
    dt: float = 0.001,
) -> CalibrationResult:
    """Find the largest pulse the body withstands without stepping.

    Pulses start at 40% of body weight and grow in 1% steps until a stepping
    event; the last maintained force is the threshold. ``fell_at_start``
    flags a body that steps at the opening force, ``cap_reached`` one that
    never steps below ``max_fraction`` (or the cable cap).
    """
    unit = DIRECTION_UNITS[direction]
    bw = rig.body.body_weight_N()
    excursions: list[np.ndarray] = []

    fraction = start_fraction
    maintained: float | None = None
    flag = ""
    while fraction <= max_fraction + 1e-12:
        force = (unit[0] * fraction * bw, unit[1] * fraction * bw)
        try:
            cable_tensions(rig, (0.0, 0.0), force, belt="trunk")
        except InfeasibleForceError:
            flag = "cap_reached"
            break
        resp = simulate_pulse(rig.body, force, pulse_duration_s, settle_s, dt)
        if resp.stepped:
            if maintained is None:
                maintained = fraction
                flag = "fell_at_start"
            break
        excursions.append(resp.excursion_trace_m)
        maintained = fraction
        fraction = round(fraction + increment, 12)
    else:
        flag = "cap_reached"

    if maintained is None:
        # cable cap hit before any pulse ran
        maintained = start_fraction
    points = (
        np.concatenate(excursions, axis=0) if excursions else np.zeros((0, 2))
    )
    return CalibrationResult(
        direction=direction,
        threshold_N=maintained * bw,
        fraction_of_bw=maintained,
        flag=flag,
        excursion_points_m=points,
    )
