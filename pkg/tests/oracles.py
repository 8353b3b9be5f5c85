"""Independent brute-force oracles used to cross-check the implementation.

These deliberately use different formulations than the library code:
the point test sums winding angles instead of casting rays, and the
segment test solves the parametric line equations instead of comparing
orientation signs.
"""

from __future__ import annotations

import math
import random

EPS = 1e-9


def winding_inside(px: float, py: float, poly) -> bool:
    """Angle-summation winding number. Only valid for points off the boundary."""
    total = 0.0
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i][0] - px, poly[i][1] - py
        bx, by = poly[(i + 1) % n][0] - px, poly[(i + 1) % n][1] - py
        total += math.atan2(ax * by - ay * bx, ax * bx + ay * by)
    return abs(total) > math.pi


def dist_point_seg(px, py, ax, ay, bx, by) -> float:
    abx, aby = bx - ax, by - ay
    ab2 = abx * abx + aby * aby
    if ab2 == 0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * abx + (py - ay) * aby) / ab2))
    return math.hypot(ax + t * abx - px, ay + t * aby - py)


def oracle_segments_intersect(a1, a2, b1, b2) -> bool:
    """Parametric solve for a proper crossing, plus endpoint-distance touch checks."""
    rx, ry = a2[0] - a1[0], a2[1] - a1[1]
    sx, sy = b2[0] - b1[0], b2[1] - b1[1]
    denom = rx * sy - ry * sx
    if abs(denom) > 1e-12:
        qpx, qpy = b1[0] - a1[0], b1[1] - a1[1]
        t = (qpx * sy - qpy * sx) / denom
        u = (qpx * ry - qpy * rx) / denom
        if 0.0 < t < 1.0 and 0.0 < u < 1.0:
            return True
    return (
        dist_point_seg(a1[0], a1[1], b1[0], b1[1], b2[0], b2[1]) <= EPS
        or dist_point_seg(a2[0], a2[1], b1[0], b1[1], b2[0], b2[1]) <= EPS
        or dist_point_seg(b1[0], b1[1], a1[0], a1[1], a2[0], a2[1]) <= EPS
        or dist_point_seg(b2[0], b2[1], a1[0], a1[1], a2[0], a2[1]) <= EPS
    )


def oracle_polygons_overlap(poly_a, poly_b) -> bool:
    """Edge-pair brute force plus mutual containment via the winding oracle."""
    na, nb = len(poly_a), len(poly_b)
    for i in range(na):
        for j in range(nb):
            if oracle_segments_intersect(poly_a[i], poly_a[(i + 1) % na],
                                         poly_b[j], poly_b[(j + 1) % nb]):
                return True
    if winding_inside(poly_a[0][0], poly_a[0][1], poly_b):
        return True
    if winding_inside(poly_b[0][0], poly_b[0][1], poly_a):
        return True
    return False


def min_edge_distance(px: float, py: float, poly) -> float:
    n = len(poly)
    return min(
        dist_point_seg(px, py, poly[i][0], poly[i][1],
                       poly[(i + 1) % n][0], poly[(i + 1) % n][1])
        for i in range(n)
    )


def oracle_windows_intersect(a_from, a_to, b_from, b_to) -> bool:
    return not (a_to < b_from or b_to < a_from)


# -- random polygon generators ---------------------------------------------------


def _signed_area(poly) -> float:
    total = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return total / 2.0


def _ccw(poly):
    return poly if _signed_area(poly) > 0 else list(reversed(poly))


def random_star_polygon(rng: random.Random, n_min=4, n_max=10,
                        cx=0.0, cy=0.0, r_min=1.0, r_max=10.0):
    """Simple star-shaped polygon: sorted angles with random radii."""
    n = rng.randint(n_min, n_max)
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(n))
    # collapse near-duplicate angles to keep edges non-degenerate
    filtered = []
    for a in angles:
        if not filtered or a - filtered[-1] > 0.05:
            filtered.append(a)
    if len(filtered) < 3:
        return random_star_polygon(rng, n_min, n_max, cx, cy, r_min, r_max)
    pts = [(cx + rng.uniform(r_min, r_max) * math.cos(a),
            cy + rng.uniform(r_min, r_max) * math.sin(a)) for a in filtered]
    return _ccw(pts)


def _convex_hull(points):
    points = sorted(set(points))
    if len(points) < 3:
        return points

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in points:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(points):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def random_convex_polygon(rng: random.Random, n_points=12, cx=0.0, cy=0.0, radius=8.0):
    pts = [(cx + rng.uniform(-radius, radius), cy + rng.uniform(-radius, radius))
           for _ in range(n_points)]
    hull = _convex_hull(pts)
    if len(hull) < 3:
        return random_convex_polygon(rng, n_points, cx, cy, radius)
    return _ccw(hull)


def random_l_polygon(rng: random.Random, cx=0.0, cy=0.0):
    """Rectilinear L shape around (cx, cy)."""
    x0 = cx + rng.uniform(-10, -2)
    x1 = cx + rng.uniform(-1, 1)
    x2 = cx + rng.uniform(2, 10)
    y0 = cy + rng.uniform(-10, -2)
    y1 = cy + rng.uniform(-1, 1)
    y2 = cy + rng.uniform(2, 10)
    return _ccw([(x0, y0), (x2, y0), (x2, y1), (x1, y1), (x1, y2), (x0, y2)])


def random_polygon(rng: random.Random, cx=0.0, cy=0.0):
    kind = rng.choice(("convex", "star", "l"))
    if kind == "convex":
        return random_convex_polygon(rng, cx=cx, cy=cy)
    if kind == "star":
        return random_star_polygon(rng, cx=cx, cy=cy)
    return random_l_polygon(rng, cx=cx, cy=cy)
