"""Safe pelvic-excursion region and the assist-as-needed force law.

The boundary is the convex hull of pelvic excursion points collected
during calibration (union-of-points is not a usable region; the hull is
its minimal convex regularization). The assistive force is zero inside the
boundary and, outside it, points from the pelvis toward the original
pelvic center with magnitude ``min(gain * distance, saturation)`` so it
vanishes continuously at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import (
    DegenerateGeometryError,
    convex_hull,
    distance_to_polygon,
    point_in_polygon,
)


@dataclass(frozen=True)
class BalanceBoundary:
    """Convex region of safe pelvic excursion, mm, containing the origin."""

    polygon: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "polygon", np.asarray(self.polygon, dtype=float))
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        if not point_in_polygon(self.origin, self.polygon):
            raise DegenerateGeometryError("boundary does not contain its origin")

    def contains(self, point) -> bool:
        return point_in_polygon(point, self.polygon)


def build_boundary(pelvic_points_mm, origin_mm=(0.0, 0.0), scale: float = 1.0) -> BalanceBoundary:
    """Convex hull of excursion points plus the origin.

    ``scale`` shrinks (or grows) the hull about the origin; used to tailor
    how early the assistive field engages.
    """
    pts = np.asarray(pelvic_points_mm, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected (n, 2) pelvic points in mm")
    origin = np.asarray(origin_mm, dtype=float)
    hull = convex_hull(np.vstack([pts, origin[None, :]]))
    if scale != 1.0:
        hull = origin[None, :] + scale * (hull - origin[None, :])
    return BalanceBoundary(polygon=hull, origin=origin)


def assistive_force(
    boundary: BalanceBoundary,
    pelvic_xy_mm,
    gain_N_per_m: float,
    saturation_N: float = np.inf,
) -> np.ndarray:
    """Restoring force (N) toward the original pelvic center.

    Zero inside or on the boundary; outside, proportional to the distance
    from the boundary (mm converted to m), capped at ``saturation_N``.
    """
    p = np.asarray(pelvic_xy_mm, dtype=float)
    if boundary.contains(p):
        return np.zeros(2)
    to_origin = boundary.origin - p
    dist_origin = float(np.linalg.norm(to_origin))
    assert dist_origin > 0.0, "pelvis at origin cannot be outside the boundary"
    d_mm = distance_to_polygon(p, boundary.polygon)
    magnitude = min(gain_N_per_m * d_mm / 1000.0, saturation_N)
    return magnitude * to_origin / dist_origin
