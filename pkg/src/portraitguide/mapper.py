"""Sketch-to-mask mapping: label user strokes against a template mask and
rebuild the template's regions from the stroke geometry.

Per-label Euclidean distance fields drive everything: a vertex belongs to
the region it is nearest to (zero inside), a stroke takes the majority label
of its vertices, and a template's fit to a whole drawing is the sum over
strokes of the mean vertex distance to the stroke's region. Strokes sharing
a label are merged, their concave hull is filled as the new region, and
labels the user never drew are copied from the template unchanged, so a
partial drawing still yields a complete mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateGeometryError, ValidationError
from .hull import concave_hull, fill_polygon
from .maskdata import BACKGROUND, LabelMask
from .strokes import Stroke, StrokeSet

FROM_STROKES = "strokes"
FROM_TEMPLATE = "template"

def _rank(name: str) -> int:
    """Flattening precedence when replaced regions overlap: small parts win.

    Palette names are matched by keyword; unknown names rank lowest.
    """
    n = name.lower()
    if "brow" in n:
        return 5
    if "eye" in n and "eye_g" not in n:  # glasses are not eyes
        return 6
    for key, rank in (("hair", 1), ("skin", 2), ("lip", 3), ("mouth", 3), ("nose", 4)):
        if key in n:
            return rank
    return 0


@dataclass(frozen=True)
class RegionDistanceField:
    """Per-label grids of Euclidean distance to the region (0 inside)."""

    grids: dict[int, np.ndarray]
    shape: tuple[int, int]

    def labels(self) -> list[int]:
        return sorted(self.grids)

    def distance(self, label: int, x: float, y: float) -> float:
        iy, ix = _vertex_pixel(x, y, self.shape)
        return float(self.grids[label][iy, ix])


@dataclass(frozen=True)
class LabeledStroke:
    stroke: Stroke
    label: int


@dataclass
class MergedMask:
    labels: np.ndarray  # uint8 [y, x], flattened regions
    palette: dict[int, str]
    provenance: dict[int, str]  # label -> FROM_STROKES | FROM_TEMPLATE

    def region(self, label: int) -> np.ndarray:
        return self.labels == label

    def as_label_mask(self) -> LabelMask:
        return LabelMask(labels=self.labels, palette=self.palette)


def _vertex_pixel(x: float, y: float, shape) -> tuple[int, int]:
    """Grid cell a vertex is measured from (nearest pixel, clipped)."""
    h, w = shape
    ix = min(max(int(np.rint(x)), 0), w - 1)
    iy = min(max(int(np.rint(y)), 0), h - 1)
    return iy, ix


def build_distance_fields(mask: LabelMask) -> RegionDistanceField:
    """Exact Euclidean distance transform per label present in the mask."""
    grids = {}
    for label in mask.labels_present():
        region = mask.labels == label
        grids[label] = ndimage.distance_transform_edt(~region)
    return RegionDistanceField(grids=grids, shape=mask.labels.shape)


def vertex_label(p, fields: RegionDistanceField, background: int = BACKGROUND) -> int:
    """Label of the nearest region; ties go to the lower label id.

    Background is never a candidate: strokes denote foreground parts.
    """
    candidates = [k for k in fields.labels() if k != background]
    if not candidates:
        raise ValidationError("mask contains only background")
    x = p.x if hasattr(p, "x") else float(p[0])
    y = p.y if hasattr(p, "y") else float(p[1])
    best = min(candidates, key=lambda k: (fields.distance(k, x, y), k))
    return best


def stroke_label(stroke: Stroke, fields: RegionDistanceField, background: int = BACKGROUND) -> int:
    """Majority vote over the stroke's vertices.

    Vote ties break toward the smaller summed vertex distance, then the
    lower label id.
    """
    if not stroke.vertices:
        raise ValidationError("stroke has no vertices")
    candidates = [k for k in fields.labels() if k != background]
    if not candidates:
        raise ValidationError("mask contains only background")
    votes = {k: 0 for k in candidates}
    sums = {k: 0.0 for k in candidates}
    for v in stroke.vertices:
        dists = {k: fields.distance(k, v.x, v.y) for k in candidates}
        winner = min(candidates, key=lambda k: (dists[k], k))
        votes[winner] += 1
        for k in candidates:
            sums[k] += dists[k]
    return min(candidates, key=lambda k: (-votes[k], sums[k], k))


def label_strokes(strokeset: StrokeSet, fields: RegionDistanceField) -> list[LabeledStroke]:
    return [LabeledStroke(stroke=s, label=stroke_label(s, fields)) for s in strokeset.strokes]


def template_score(strokeset: StrokeSet, mask: LabelMask, fields: RegionDistanceField | None = None) -> float:
    """Shape-fit score of a drawing against a template; lower is better.

    Sum over strokes of the mean vertex distance to the stroke's voted
    region. Zero exactly when every vertex sits inside its region.
    """
    if not strokeset.strokes:
        raise ValidationError("cannot score an empty stroke set")
    if fields is None:
        fields = build_distance_fields(mask)
    total = 0.0
    for s in strokeset.strokes:
        k = stroke_label(s, fields)
        dists = [fields.distance(k, v.x, v.y) for v in s.vertices]
        total += float(np.mean(dists))
    return total


def merge_strokes(labeled: list[LabeledStroke]) -> np.ndarray:
    """Concatenate same-label strokes into one (n, 2) point array."""
    if not labeled:
        raise ValidationError("nothing to merge")
    labels = {ls.label for ls in labeled}
    if len(labels) > 1:
        raise ValidationError(f"cannot merge strokes with mixed labels {sorted(labels)}")
    return np.concatenate([ls.stroke.points() for ls in labeled], axis=0)


def _stroke_band(strokes: list[Stroke], shape) -> np.ndarray:
    """Fallback region for degenerate stroke geometry: the rasterized
    strokes dilated by their width."""
    h, w = shape
    subset = StrokeSet(strokes=tuple(strokes), canvas_size=(w, h))
    from .strokes import rasterize

    band = rasterize(subset)
    radius = max(int(np.ceil(max(s.width for s in strokes))), 1)
    ys, xs = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    disk = (xs * xs + ys * ys) <= radius * radius
    return ndimage.binary_dilation(band, structure=disk)


def map_sketch_to_mask(
    strokeset: StrokeSet,
    template: LabelMask,
    fields: RegionDistanceField | None = None,
    hull_neighbors: int = 3,
) -> MergedMask:
    """Build the user-defined mask from strokes and a matched template.

    For every label present in the template: regions the user drew are
    replaced by the filled concave hull of the merged stroke points, all
    others are copied from the template bit-exact. Overlaps between
    replaced regions are resolved by a fixed precedence where small facial
    parts win over large ones.
    """
    shape = template.labels.shape
    present = [k for k in template.labels_present() if k != BACKGROUND]
    provenance = {k: FROM_TEMPLATE for k in present}

    for s in strokeset.strokes:
        pts = s.points()
        h, w = shape
        if np.any(pts[:, 0] >= w) or np.any(pts[:, 1] >= h) or np.any(pts < 0):
            raise ValidationError("stroke vertices outside the template canvas")

    if not strokeset.strokes or not present:
        return MergedMask(labels=template.labels.copy(), palette=dict(template.palette), provenance=provenance)

    if fields is None:
        fields = build_distance_fields(template)
    by_label: dict[int, list[LabeledStroke]] = {}
    for ls in label_strokes(strokeset, fields):
        by_label.setdefault(ls.label, []).append(ls)

    regions: dict[int, np.ndarray] = {}
    for k in present:
        if k in by_label:
            pts = merge_strokes(by_label[k])
            try:
                poly = concave_hull(pts, k_neighbors=hull_neighbors)
                region = fill_polygon(poly, shape)
            except DegenerateGeometryError:
                region = np.zeros(shape, dtype=bool)
            if not region.any():
                # hull thinner than a pixel row: fall back to the ink band
                region = _stroke_band([ls.stroke for ls in by_label[k]], shape)
            regions[k] = region
            provenance[k] = FROM_STROKES
        else:
            regions[k] = template.labels == k

    out = np.zeros(shape, dtype=np.uint8)
    names = template.palette
    # ascending precedence; within a rank, higher ids first so the lower
    # label id ends on top
    paint_order = sorted(present, key=lambda k: (_rank(names.get(k, "")), -k))
    for k in paint_order:
        out[regions[k]] = k
    return MergedMask(labels=out, palette=dict(template.palette), provenance=provenance)


def dump_debug(merged: MergedMask, prefix) -> tuple[str, str]:
    """Write the merged mask and a provenance raster for inspection."""
    from .images import save_gray

    mask_path = f"{prefix}_mask.png"
    prov_path = f"{prefix}_provenance.png"
    save_gray(mask_path, merged.labels)
    prov = np.zeros(merged.labels.shape, dtype=np.uint8)
    for k, source in merged.provenance.items():
        prov[merged.labels == k] = 255 if source == FROM_STROKES else 128
    save_gray(prov_path, prov)
    return mask_path, prov_path
