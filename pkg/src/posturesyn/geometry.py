"""Small planar-geometry kit: convex hull, point-in-polygon, edge distance.

Kept dependency-free and deterministic; polygons are (k, 2) float arrays in
counter-clockwise order without a repeated closing vertex.
"""

from __future__ import annotations

import numpy as np


class DegenerateGeometryError(ValueError):
    """Input points do not span a polygon."""


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull via the monotone chain, CCW, collinear points dropped."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if pts.shape[0] < 3:
        raise DegenerateGeometryError("need at least 3 distinct points")
    # unique() sorts lexicographically, which is the scan order we need
    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.asarray(lower[:-1] + upper[:-1])
    if hull.shape[0] < 3:
        raise DegenerateGeometryError("points are collinear")
    return hull


def point_in_polygon(point, polygon: np.ndarray, atol: float = 1e-12) -> bool:
    """True if ``point`` is inside or on the boundary of a convex CCW polygon."""
    x, y = float(point[0]), float(point[1])
    poly = np.asarray(polygon, dtype=float)
    n = poly.shape[0]
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
        scale = max(abs(bx - ax), abs(by - ay), 1.0)
        if cross < -atol * scale:
            return False
    return True


def _segment_distance(px, py, ax, ay, bx, by) -> float:
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return float(np.hypot(px - ax, py - ay))
    u = ((px - ax) * dx + (py - ay) * dy) / seg2
    u = min(1.0, max(0.0, u))
    return float(np.hypot(px - (ax + u * dx), py - (ay + u * dy)))


def distance_to_polygon(point, polygon: np.ndarray) -> float:
    """Unsigned distance from a point to the polygon boundary."""
    x, y = float(point[0]), float(point[1])
    poly = np.asarray(polygon, dtype=float)
    n = poly.shape[0]
    return min(
        _segment_distance(x, y, poly[i][0], poly[i][1],
                          poly[(i + 1) % n][0], poly[(i + 1) % n][1])
        for i in range(n)
    )


def polygon_area(polygon: np.ndarray) -> float:
    poly = np.asarray(polygon, dtype=float)
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, 1)) - np.dot(y, np.roll(x, 1))))
