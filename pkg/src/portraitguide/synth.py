"""Portrait synthesis for local guidance.

Synthesizers are pluggable by name. The bundled "region-composite"
implementation maps each facial region of the template photo into the
user-defined region of the merged mask through the affine transform between
the two regions' bounding boxes; an "external" implementation shells out to
a configured command so a model-backed generator can be swapped in without
engine changes.
"""

from __future__ import annotations

import logging
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .images import load_gray, save_gray
from .maskdata import BACKGROUND, DatasetEntry, LabelMask
from .mapper import MergedMask, build_distance_fields, map_sketch_to_mask, template_score
from .strokes import StrokeSet

log = logging.getLogger(__name__)

STYLE_PHOTO = "photo"
STYLE_SKETCH_LINES = "sketch-lines"


@dataclass(frozen=True)
class SynthesisRequest:
    merged_mask: MergedMask
    template: DatasetEntry
    style: str = STYLE_SKETCH_LINES


@dataclass
class GuidanceCandidate:
    candidate_id: str
    template_entry_id: str
    portrait: np.ndarray  # uint8 grayscale
    rank: int
    merged_mask: MergedMask
    fit_score: float


_REGISTRY: dict[str, object] = {}


def register_synthesizer(name: str, fn) -> None:
    _REGISTRY[name] = fn


def get_synthesizer(name: str):
    if name not in _REGISTRY:
        raise ValidationError(
            f"unknown synthesizer {name!r}; registered: {sorted(_REGISTRY)}"
        )
    return _REGISTRY[name]


def background_mask(merged: MergedMask) -> np.ndarray:
    """True where any foreground facial label is painted."""
    return merged.labels != BACKGROUND


def synthesize_portrait(request: SynthesisRequest, impl: str = "region-composite") -> np.ndarray:
    portrait = get_synthesizer(impl)(request)
    if request.style == STYLE_SKETCH_LINES:
        portrait = stylize_lines(portrait)
    return portrait


def _bbox(region: np.ndarray):
    ys, xs = np.nonzero(region)
    return ys.min(), ys.max(), xs.min(), xs.max()


def region_composite(request: SynthesisRequest) -> np.ndarray:
    """Bounding-box affine remap of template content into merged regions."""
    merged = request.merged_mask
    timg = load_gray(request.template.image_path)
    from .images import load_labels

    tlabels = load_labels(request.template.mask_path)
    if timg.shape != merged.labels.shape or tlabels.shape != merged.labels.shape:
        raise ValidationError("template image/mask size does not match the merged mask")

    out = np.full(merged.labels.shape, 255, dtype=np.uint8)
    for k in sorted(merged.provenance):
        dst = merged.labels == k
        src = tlabels == k
        if not dst.any() or not src.any():
            continue
        sy0, sy1, sx0, sx1 = _bbox(src)
        dy0, dy1, dx0, dx1 = _bbox(dst)
        ys, xs = np.nonzero(dst)
        # nearest-neighbor sample along the box-to-box affine map
        fy = (sy1 - sy0 + 1) / (dy1 - dy0 + 1)
        fx = (sx1 - sx0 + 1) / (dx1 - dx0 + 1)
        src_y = np.clip(np.rint(sy0 + (ys - dy0) * fy), sy0, sy1).astype(int)
        src_x = np.clip(np.rint(sx0 + (xs - dx0) * fx), sx0, sx1).astype(int)
        out[ys, xs] = timg[src_y, src_x]
    return out


def make_external_synthesizer(command_template: str):
    """Wrap a shell command with {mask}, {image}, {out} placeholders."""

    def run(request: SynthesisRequest) -> np.ndarray:
        with tempfile.TemporaryDirectory(prefix="synth-") as tmp:
            tmp = Path(tmp)
            mask_path = tmp / "mask.png"
            out_path = tmp / "out.png"
            save_gray(mask_path, request.merged_mask.labels)
            cmd = [
                part.format(
                    mask=mask_path, image=request.template.image_path, out=out_path
                )
                for part in shlex.split(command_template)
            ]
            proc = subprocess.run(cmd, capture_output=True, text=True)
            if proc.returncode != 0:
                raise ValidationError(
                    f"external synthesizer failed ({proc.returncode}): {proc.stderr.strip()}"
                )
            if not out_path.exists():
                raise ValidationError("external synthesizer wrote no output raster")
            return load_gray(out_path)

    return run


register_synthesizer("region-composite", region_composite)


def stylize_lines(portrait: np.ndarray, sigma: float = 1.0, ratio: float = 1.6, threshold: float = 0.05) -> np.ndarray:
    """Difference-of-Gaussians edges, thresholded to dark lines on white."""
    img = np.asarray(portrait, dtype=float) / 255.0
    if img.ndim != 2:
        raise ValidationError("stylize_lines expects a grayscale raster")
    response = ndimage.gaussian_filter(img, sigma) - ndimage.gaussian_filter(img, sigma * ratio)
    ink = np.abs(response) > threshold
    return np.where(ink, 0, 255).astype(np.uint8)


def generate_candidates(
    strokeset: StrokeSet,
    top_templates: list[tuple[DatasetEntry, LabelMask]],
    impl: str = "region-composite",
    style: str = STYLE_SKETCH_LINES,
    hull_neighbors: int = 3,
) -> list[GuidanceCandidate]:
    """One candidate per template, ordered by retrieval rank.

    A failing template is skipped with a warning; at least one candidate
    must survive.
    """
    if not top_templates:
        raise ValidationError("need at least one template")
    get_synthesizer(impl)  # fail fast on unknown implementations
    candidates = []
    for rank, (entry, template_mask) in enumerate(top_templates, start=1):
        try:
            fields = build_distance_fields(template_mask)
            merged = map_sketch_to_mask(
                strokeset, template_mask, fields=fields, hull_neighbors=hull_neighbors
            )
            fit = (
                template_score(strokeset, template_mask, fields=fields)
                if strokeset.strokes
                else 0.0
            )
            portrait = synthesize_portrait(
                SynthesisRequest(merged_mask=merged, template=entry, style=style), impl=impl
            )
        except Exception as exc:
            log.warning("candidate %d (%s) failed: %s", rank, entry.entry_id, exc)
            continue
        candidates.append(
            GuidanceCandidate(
                candidate_id=f"cand{rank}",
                template_entry_id=entry.entry_id,
                portrait=portrait,
                rank=rank,
                merged_mask=merged,
                fit_score=fit,
            )
        )
    if not candidates:
        raise ValidationError("every candidate failed to generate")
    return candidates
