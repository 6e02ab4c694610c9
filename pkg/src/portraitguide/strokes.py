"""Stroke data model, editing operations, and rasterization.

A drawing is an immutable ``StrokeSet``; every edit returns a new value.
Stroke order numbers grow monotonically for the lifetime of a set and are
never reused, so the most recent stroke is always the one with the highest
order even after undos.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DocumentError, ValidationError
from .validation import check_canvas_size

log = logging.getLogger(__name__)

DEFAULT_CANVAS = (512, 512)
DOCUMENT_VERSION = 1
ERASE_TOLERANCE = 6.0


@dataclass(frozen=True)
class Vertex:
    x: float
    y: float


@dataclass(frozen=True)
class Stroke:
    id: int
    vertices: tuple[Vertex, ...]
    width: float
    order: int

    def points(self) -> np.ndarray:
        return np.array([(v.x, v.y) for v in self.vertices], dtype=float)


@dataclass(frozen=True)
class StrokeSet:
    strokes: tuple[Stroke, ...] = ()
    canvas_size: tuple[int, int] = DEFAULT_CANVAS
    # Monotone counters survive undo; excluded from equality so that a
    # round-tripped document compares equal to its source set.
    next_id: int = field(default=0, compare=False)
    next_order: int = field(default=0, compare=False)

    def __len__(self):
        return len(self.strokes)


def _check_polyline(polyline, canvas_size) -> tuple[Vertex, ...]:
    if not polyline:
        raise ValidationError("polyline must contain at least one vertex")
    w, h = canvas_size
    verts = []
    for i, p in enumerate(polyline):
        v = p if isinstance(p, Vertex) else Vertex(float(p[0]), float(p[1]))
        if not (0 <= v.x < w and 0 <= v.y < h):
            raise ValidationError(
                f"vertex {i} at ({v.x}, {v.y}) outside canvas {w}x{h}"
            )
        verts.append(Vertex(float(v.x), float(v.y)))
    return tuple(verts)


def add_stroke(strokeset: StrokeSet, polyline, width) -> StrokeSet:
    """Append one stroke; vertices must lie inside the canvas."""
    if float(width) <= 0:
        raise ValidationError(f"stroke width must be positive, got {width}")
    verts = _check_polyline(polyline, strokeset.canvas_size)
    stroke = Stroke(
        id=strokeset.next_id,
        vertices=verts,
        width=float(width),
        order=strokeset.next_order,
    )
    return replace(
        strokeset,
        strokes=strokeset.strokes + (stroke,),
        next_id=strokeset.next_id + 1,
        next_order=strokeset.next_order + 1,
    )


def _point_segment_distance(px, py, ax, ay, bx, by):
    """Distance from points (px, py) to segment (a, b); px/py may be arrays."""
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return np.hypot(px - ax, py - ay)
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / seg2, 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _stroke_distance(stroke: Stroke, x: float, y: float) -> float:
    pts = stroke.points()
    if len(pts) == 1:
        return float(np.hypot(x - pts[0, 0], y - pts[0, 1]))
    d = np.inf
    for (ax, ay), (bx, by) in zip(pts[:-1], pts[1:]):
        d = min(d, float(_point_segment_distance(x, y, ax, ay, bx, by)))
    return d


def erase_stroke(strokeset: StrokeSet, click, tolerance: float = ERASE_TOLERANCE) -> StrokeSet:
    """Remove the stroke nearest the click, if within tolerance.

    Misses are a no-op. Distance ties go to the most recent stroke.
    """
    cx = click.x if isinstance(click, Vertex) else float(click[0])
    cy = click.y if isinstance(click, Vertex) else float(click[1])
    best = None
    for stroke in strokeset.strokes:
        d = _stroke_distance(stroke, cx, cy)
        if d > tolerance:
            continue
        if best is None or d < best[0] or (d == best[0] and stroke.order > best[1].order):
            best = (d, stroke)
    if best is None:
        return strokeset
    keep = tuple(s for s in strokeset.strokes if s.id != best[1].id)
    return replace(strokeset, strokes=keep)


def undo(strokeset: StrokeSet) -> StrokeSet:
    """Drop the stroke with the highest order; empty set is a no-op."""
    if not strokeset.strokes:
        return strokeset
    last = max(strokeset.strokes, key=lambda s: s.order)
    keep = tuple(s for s in strokeset.strokes if s.id != last.id)
    return replace(strokeset, strokes=keep)


def rasterize(strokeset: StrokeSet, size=None) -> np.ndarray:
    """Render to a boolean ink grid (row-major, [y, x]).

    A pixel is ink when its center lies within half the stroke width of the
    stroke's polyline, which gives round caps and joins. Output depends only
    on geometry, width, and order, never on stroke ids.
    """
    w, h = check_canvas_size(size if size is not None else strokeset.canvas_size)
    out = np.zeros((h, w), dtype=bool)
    for stroke in strokeset.strokes:
        radius = max(stroke.width, 1.0) / 2.0
        pts = stroke.points()
        segments = (
            [(pts[0], pts[0])] if len(pts) == 1 else list(zip(pts[:-1], pts[1:]))
        )
        for a, b in segments:
            x0 = max(int(np.floor(min(a[0], b[0]) - radius)), 0)
            x1 = min(int(np.ceil(max(a[0], b[0]) + radius)) + 1, w)
            y0 = max(int(np.floor(min(a[1], b[1]) - radius)), 0)
            y1 = min(int(np.ceil(max(a[1], b[1]) + radius)) + 1, h)
            if x0 >= x1 or y0 >= y1:
                continue
            ys, xs = np.mgrid[y0:y1, x0:x1]
            d = _point_segment_distance(xs, ys, a[0], a[1], b[0], b[1])
            out[y0:y1, x0:x1] |= d <= radius
    return out


def save_sketch(strokeset: StrokeSet) -> dict:
    """Serialize to the versioned sketch document."""
    return {
        "version": DOCUMENT_VERSION,
        "canvas": [strokeset.canvas_size[0], strokeset.canvas_size[1]],
        "strokes": [
            {
                "id": s.id,
                "width": s.width,
                "order": s.order,
                "points": [[v.x, v.y] for v in s.vertices],
            }
            for s in strokeset.strokes
        ],
    }


def _require(doc, key, kind, where):
    if key not in doc:
        raise DocumentError(f"{where}.{key}", "missing")
    value = doc[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DocumentError(f"{where}.{key}", f"expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, kind):
        raise DocumentError(f"{where}.{key}", f"expected {kind.__name__}, got {value!r}")
    return value


def load_sketch(doc: dict) -> StrokeSet:
    """Parse a sketch document; raises DocumentError naming the bad field.

    Non-monotone stroke orders are normalized by re-sequencing (relative
    order preserved) with a warning.
    """
    if not isinstance(doc, dict):
        raise DocumentError("document", "expected an object")
    version = _require(doc, "version", int, "document")
    if version != DOCUMENT_VERSION:
        raise DocumentError("document.version", f"unsupported version {version}")
    canvas = _require(doc, "canvas", list, "document")
    if len(canvas) != 2 or not all(isinstance(c, int) and c > 0 for c in canvas):
        raise DocumentError("document.canvas", f"expected [width, height], got {canvas!r}")
    w, h = canvas
    raw = _require(doc, "strokes", list, "document")

    strokes = []
    seen_ids = set()
    for i, sdoc in enumerate(raw):
        where = f"strokes[{i}]"
        if not isinstance(sdoc, dict):
            raise DocumentError(where, "expected an object")
        sid = _require(sdoc, "id", int, where)
        if sid in seen_ids:
            raise DocumentError(f"{where}.id", f"duplicate id {sid}")
        seen_ids.add(sid)
        width = _require(sdoc, "width", float, where)
        if width <= 0:
            raise DocumentError(f"{where}.width", f"must be positive, got {width}")
        order = _require(sdoc, "order", int, where)
        points = _require(sdoc, "points", list, where)
        if not points:
            raise DocumentError(f"{where}.points", "must not be empty")
        verts = []
        for j, p in enumerate(points):
            if not (isinstance(p, list) and len(p) == 2) or any(
                isinstance(c, bool) or not isinstance(c, (int, float)) for c in p
            ):
                raise DocumentError(f"{where}.points[{j}]", f"expected [x, y], got {p!r}")
            x, y = float(p[0]), float(p[1])
            if not (0 <= x < w and 0 <= y < h):
                raise DocumentError(
                    f"{where}.points[{j}]", f"({x}, {y}) outside canvas {w}x{h}"
                )
            verts.append(Vertex(x, y))
        strokes.append(Stroke(id=sid, vertices=tuple(verts), width=width, order=order))

    orders = [s.order for s in strokes]
    if any(b <= a for a, b in zip(orders, orders[1:])):
        log.warning("sketch document has non-monotone stroke orders; re-sequencing")
        ranked = sorted(range(len(strokes)), key=lambda i: (strokes[i].order, i))
        strokes = [replace(strokes[i], order=rank) for rank, i in enumerate(ranked)]

    next_id = max(seen_ids, default=-1) + 1
    next_order = max((s.order for s in strokes), default=-1) + 1
    return StrokeSet(
        strokes=tuple(strokes),
        canvas_size=(w, h),
        next_id=next_id,
        next_order=next_order,
    )
