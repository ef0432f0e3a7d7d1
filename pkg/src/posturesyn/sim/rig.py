"""Rig geometry and minimum-effort cable tension allocation.

Forces on a belt are the resultant of four cable tensions pulling toward
the pulleys. Allocation solves

    min sum(t_i^2)  s.t.  sum(t_i * u_i) = desired_force,  t_i >= 0

by active-set iteration on the non-negativity constraints: 4 variables and
2 equality constraints make every subproblem a tiny closed-form solve.
Moments about the belt are ignored (the belt force is treated as a point
resultant).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRAVITY = 9.81

FORCE_RESIDUAL_TOL_N = 1e-6


class InfeasibleForceError(ValueError):
    """Force outside the cable cone or above the tension cap."""


class DegenerateRigError(ValueError):
    """Cable geometry cannot span the plane."""


@dataclass(frozen=True)
class BodyParams:
    """Damped planar inverted-pendulum stand-in for the subject.

    The ankle applies a restoring horizontal-force equivalent
    ``kp*q + kd*v`` whose torque sets the COP; ``damping`` is passive. The
    plant is a control proxy, not a physiological model.
    """

    mass_kg: float = 70.0
    com_height_m: float = 0.9
    support_half_ap_m: float = 0.12
    support_half_ml_m: float = 0.10
    damping_N_s_per_m: float = 100.0
    ankle_kp_N_per_m: float = 15000.0
    ankle_kd_N_s_per_m: float = 1800.0

    def __post_init__(self):
        if min(self.mass_kg, self.com_height_m, self.support_half_ap_m,
               self.support_half_ml_m) <= 0:
            raise ValueError("body dimensions and mass must be positive")
        if self.ankle_kp_N_per_m <= self.gravity_stiffness():
            raise ValueError(
                "ankle stiffness must exceed m*g/h or the plant cannot stand"
            )

    def gravity_stiffness(self) -> float:
        return self.mass_kg * GRAVITY / self.com_height_m

    def body_weight_N(self) -> float:
        return self.mass_kg * GRAVITY

    def static_tipping_force_N(self, axis: str = "ap") -> float:
        """Closed-form force at which the steady-state COP demand reaches
        the support edge: F* = (m g L / h) * (kp - m g / h) / kp."""
        half = self.support_half_ap_m if axis == "ap" else self.support_half_ml_m
        mg_h = self.gravity_stiffness()
        return half * mg_h * (self.ankle_kp_N_per_m - mg_h) / self.ankle_kp_N_per_m


def _default_pulleys() -> np.ndarray:
    return np.array([[1.2, 1.2], [-1.2, 1.2], [-1.2, -1.2], [1.2, -1.2]])


@dataclass(frozen=True)
class RigModel:
    """Cable anchor geometry, body model and force-field settings."""

    trunk_pulleys: np.ndarray = field(default_factory=_default_pulleys)
    pelvic_pulleys: np.ndarray = field(default_factory=_default_pulleys)
    belt_attachment_radius_m: float = 0.15
    max_cable_tension_N: float = 600.0
    body: BodyParams = field(default_factory=BodyParams)
    force_field_gain_N_per_m: float = 2000.0
    force_field_saturation_N: float = 80.0

    def __post_init__(self):
        for name in ("trunk_pulleys", "pelvic_pulleys"):
            pts = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, pts)
            if pts.shape != (4, 2):
                raise DegenerateRigError(f"{name} must be 4 planar points")
            _validate_span(pts, name)

    def pulleys(self, belt: str) -> np.ndarray:
        if belt == "trunk":
            return self.trunk_pulleys
        if belt == "pelvic":
            return self.pelvic_pulleys
        raise ValueError(f"unknown belt {belt!r}")


def _validate_span(pulleys: np.ndarray, name: str) -> None:
    """Cable unit vectors must positively span the plane (no dead cone)."""
    u = _unit_vectors(pulleys, np.zeros(2))
    angles = np.sort(np.arctan2(u[:, 1], u[:, 0]))
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
    if gaps.max() >= np.pi - 1e-12:
        raise DegenerateRigError(
            f"{name}: cable directions leave a half-plane unreachable"
        )


def _unit_vectors(pulleys: np.ndarray, belt_center: np.ndarray) -> np.ndarray:
    d = pulleys - belt_center[None, :]
    norms = np.linalg.norm(d, axis=1)
    if np.any(norms < 1e-9):
        raise DegenerateRigError("belt center coincides with a pulley")
    return d / norms[:, None]


def cable_tensions(
    rig: RigModel,
    belt_center,
    desired_force,
    belt: str = "trunk",
) -> np.ndarray:
    """Nonnegative tensions realizing ``desired_force`` with minimum effort.

    Raises :class:`InfeasibleForceError` when the force lies outside the
    positive cable cone at this pose or exceeds the tension cap.
    """
    belt_center = np.asarray(belt_center, dtype=float)
    f = np.asarray(desired_force, dtype=float)
    U = _unit_vectors(rig.pulleys(belt), belt_center).T  # (2, 4)

    if np.allclose(f, 0.0):
        return np.zeros(4)

    free = [0, 1, 2, 3]
    tensions = np.zeros(4)
    seen: set[tuple[int, ...]] = set()
    for _ in range(32):
        key = tuple(free)
        if key in seen:
            break
        seen.add(key)
        Uf = U[:, free]
        gram = Uf @ Uf.T
        if len(free) < 2 or np.linalg.matrix_rank(gram, tol=1e-12) < 2:
            raise InfeasibleForceError(
                f"force {f} outside the feasible cable cone"
            )
        lam = np.linalg.solve(gram, f)  # lambda / 2 in KKT terms
        t_free = Uf.T @ lam
        if np.all(t_free >= -1e-12):
            tensions = np.zeros(4)
            tensions[free] = np.maximum(t_free, 0.0)
            # check multipliers of the pinned cables; release if profitable
            pinned = [i for i in range(4) if i not in free]
            mult = {i: -float(U[:, i] @ lam) for i in pinned}
            worst = min(mult, key=mult.get) if mult else None
            if worst is not None and mult[worst] < -1e-12:
                free = sorted(free + [worst])
                continue
            break
        drop = free[int(np.argmin(t_free))]
        free = [i for i in free if i != drop]
    else:
        raise InfeasibleForceError(f"tension allocation did not converge for {f}")

    residual = np.linalg.norm(U @ tensions - f)
    if residual > FORCE_RESIDUAL_TOL_N:
        raise InfeasibleForceError(
            f"force {f} unreachable: residual {residual:.2e} N"
        )
    if np.any(tensions > rig.max_cable_tension_N):
        raise InfeasibleForceError(
            f"force {f} needs tension {tensions.max():.1f} N above the "
            f"{rig.max_cable_tension_N:.1f} N cap"
        )
    return tensions
