"""Concave hulls and polygon rasterization.

The concave hull follows the k-nearest-neighbor gift-wrapping scheme: walk
the boundary picking, among the k nearest unused points, the most clockwise
turn that does not cross the hull built so far. If the walk fails to close
or leaves points outside, k escalates; at k = point count the convex hull
is returned, which always satisfies containment.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateGeometryError

_EPS = 1e-9


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull, counter-clockwise, no repeated endpoint."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    if len(pts) < 3:
        raise DegenerateGeometryError(f"need 3 distinct points, got {len(pts)}")
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in pts[::-1]:
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise DegenerateGeometryError("all points are collinear")
    return hull


def polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd containment; points on an edge count as inside."""
    pts = np.asarray(points, dtype=float)
    px, py = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        # boundary test against segment ab
        dx, dy = bx - ax, by - ay
        seg2 = dx * dx + dy * dy
        if seg2 == 0:
            on_edge |= (np.abs(px - ax) < _EPS) & (np.abs(py - ay) < _EPS)
            continue
        t = np.clip(((px - ax) * dx + (py - ay) * dy) / seg2, 0.0, 1.0)
        on_edge |= np.hypot(px - (ax + t * dx), py - (ay + t * dy)) < 1e-7
        # even-odd ray crossing, half-open in y to count shared vertices once
        cond = (ay <= py) != (by <= py)
        with np.errstate(invalid="ignore", divide="ignore"):
            xi = ax + (py - ay) * dx / (dy if dy != 0 else np.inf)
        inside ^= cond & (px < xi)
    return inside | on_edge


def _segments_properly_intersect(p1, p2, p3, p4) -> bool:
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _knn_wrap(pts: np.ndarray, k: int):
    """One gift-wrapping attempt; None when the walk cannot close simply."""
    n = len(pts)
    start = int(np.lexsort((pts[:, 0], pts[:, 1]))[0])  # lowest y, then x
    hull = [start]
    used = np.zeros(n, dtype=bool)
    used[start] = True
    prev_angle = 0.0
    current = start
    for step in range(2, 3 * n + 2):
        if step == 5:
            used[start] = False  # allow closing the loop once underway
        cand = np.nonzero(~used)[0]
        if len(cand) == 0:
            return None
        d2 = np.sum((pts[cand] - pts[current]) ** 2, axis=1)
        near = cand[np.lexsort((cand, d2))][:k]
        v = pts[near] - pts[current]
        angles = np.mod(np.arctan2(v[:, 1], v[:, 0]) - prev_angle, 2 * np.pi)
        order = near[np.lexsort((near, -angles))]  # most clockwise turn first

        chosen = -1
        for idx in order:
            closing = idx == start
            seg_a, seg_b = pts[current], pts[idx]
            ok = True
            last = len(hull) - 1 - (1 if closing else 0)
            for j in range(last):
                if _segments_properly_intersect(seg_a, seg_b, pts[hull[j]], pts[hull[j + 1]]):
                    ok = False
                    break
            if ok:
                chosen = int(idx)
                break
        if chosen < 0:
            return None
        if chosen == start:
            return np.array([pts[i] for i in hull])
        hull.append(chosen)
        used[chosen] = True
        prev_angle = np.arctan2(
            pts[current][1] - pts[chosen][1], pts[current][0] - pts[chosen][0]
        )
        current = chosen
    return None


def concave_hull(points, k_neighbors: int = 3) -> np.ndarray:
    """Simple polygon containing every input point.

    k escalates automatically until the hull closes and contains all points;
    the convex hull is the terminal fallback.
    """
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        raise DegenerateGeometryError(f"need 3 distinct points, got {len(pts)}")
    d = pts - pts[0]
    ref = d[np.argmax(np.sum(d * d, axis=1))]
    if np.all(np.abs(d[:, 0] * ref[1] - d[:, 1] * ref[0]) < _EPS * (1 + np.abs(ref).sum())):
        raise DegenerateGeometryError("all points are collinear")
    k = max(3, int(k_neighbors))
    while k < len(pts):
        poly = _knn_wrap(pts, k)
        if poly is not None and len(poly) >= 3 and points_in_polygon(pts, poly).all():
            return poly
        k += 1
    return convex_hull(pts)


def fill_polygon(poly: np.ndarray, shape) -> np.ndarray:
    """Even-odd scanline rasterization over integer pixel centers."""
    h, w = shape
    out = np.zeros((h, w), dtype=bool)
    n = len(poly)
    rows: dict[int, list[float]] = {}
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if y0 == y1:
            continue
        lo, hi = (y0, y1) if y0 < y1 else (y1, y0)
        start = max(int(np.ceil(lo)), 0)
        stop = min(int(np.ceil(hi)), h)  # half-open: lo <= y < hi
        for y in range(start, stop):
            rows.setdefault(y, []).append(x0 + (y - y0) * (x1 - x0) / (y1 - y0))
    for y, xs in rows.items():
        xs.sort()
        for a, b in zip(xs[0::2], xs[1::2]):
            c0 = max(int(np.ceil(a)), 0)
            c1 = min(int(np.ceil(b)), w)  # centers with a <= x < b
            if c1 > c0:
                out[y, c0:c1] = True
    return out
