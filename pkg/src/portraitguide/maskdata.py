"""Label masks, contour extraction, and corpus dataset assembly.

The offline pipeline ingests pre-segmented facial label masks together with
their source face images, extracts per-part boundary sketches, and emits a
manifest that the index builder and the synthesizer consume.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DocumentError, ValidationError
from .images import load_labels, save_binary

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
BACKGROUND = 0

# 19-label facial segmentation convention (background fixed at 0); the rest
# is corpus configuration and can be overridden with a palette file.
DEFAULT_PALETTE = {
    0: "background",
    1: "skin",
    2: "l_brow",
    3: "r_brow",
    4: "l_eye",
    5: "r_eye",
    6: "eye_g",
    7: "l_ear",
    8: "r_ear",
    9: "ear_r",
    10: "nose",
    11: "mouth",
    12: "u_lip",
    13: "l_lip",
    14: "neck",
    15: "neck_l",
    16: "cloth",
    17: "hair",
    18: "hat",
}


def check_palette(palette: dict) -> dict[int, str]:
    out = {}
    for k, v in palette.items():
        out[int(k)] = str(v)
    if BACKGROUND not in out:
        raise ValidationError("palette must contain background label 0")
    return out


def load_palette(path) -> dict[int, str]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "labels" not in doc:
        raise DocumentError("palette.labels", "missing")
    return check_palette(doc["labels"])


def save_palette(path, palette: dict[int, str]) -> None:
    doc = {"version": 1, "labels": {str(k): v for k, v in sorted(palette.items())}}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


@dataclass(frozen=True)
class LabelMask:
    labels: np.ndarray  # uint8 [y, x]
    palette: dict[int, str]

    @property
    def shape(self):
        return self.labels.shape

    @property
    def canvas_size(self):
        h, w = self.labels.shape
        return (w, h)

    def labels_present(self) -> list[int]:
        return sorted(int(v) for v in np.unique(self.labels))

    def region(self, label: int) -> np.ndarray:
        return self.labels == label


def make_label_mask(labels, palette) -> LabelMask:
    palette = check_palette(palette)
    arr = np.asarray(labels, dtype=np.uint8)
    unknown = sorted(set(np.unique(arr).tolist()) - set(palette))
    if unknown:
        raise ValidationError(f"mask contains label ids not in palette: {unknown}")
    return LabelMask(labels=arr, palette=palette)


def load_label_mask(path, palette, expected_size=None) -> LabelMask:
    """Decode an 8-bit label raster and validate it against the palette."""
    arr = load_labels(path)
    if expected_size is not None:
        w, h = expected_size
        if arr.shape != (h, w):
            raise ValidationError(
                f"{path}: mask is {arr.shape[1]}x{arr.shape[0]}, expected {w}x{h}"
            )
    try:
        return make_label_mask(arr, palette)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def extract_contours(mask: LabelMask, exclude=()) -> np.ndarray:
    """Boundary ink: non-background pixels with a 4-neighbor of another label.

    Inner-boundary definition, so a border between two foreground parts gets
    ink on both sides while background regions stay empty. Pixels at the
    canvas rim have no phantom outside neighbor. Labels in ``exclude`` (for
    example hair or clothing) contribute no ink of their own.
    """
    lab = mask.labels
    diff = np.zeros(lab.shape, dtype=bool)
    diff[1:, :] |= lab[1:, :] != lab[:-1, :]
    diff[:-1, :] |= lab[:-1, :] != lab[1:, :]
    diff[:, 1:] |= lab[:, 1:] != lab[:, :-1]
    diff[:, :-1] |= lab[:, :-1] != lab[:, 1:]
    ink = diff & (lab != BACKGROUND)
    for label in exclude:
        ink &= lab != label
    return ink


@dataclass(frozen=True)
class DatasetEntry:
    entry_id: str
    contour_path: Path
    mask_path: Path
    image_path: Path


@dataclass
class DatasetManifest:
    entries: list[DatasetEntry]
    palette: dict[int, str]
    canvas_size: tuple[int, int]

    def entry(self, entry_id: str) -> DatasetEntry:
        for e in self.entries:
            if e.entry_id == entry_id:
                return e
        raise KeyError(entry_id)


def save_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    base = path.parent.resolve()
    doc = {
        "version": MANIFEST_VERSION,
        "canvas": list(manifest.canvas_size),
        "palette": {str(k): v for k, v in sorted(manifest.palette.items())},
        "entries": [
            {
                "entry_id": e.entry_id,
                "contour": relpath(e.contour_path, base),
                "mask": relpath(e.mask_path, base),
                "image": relpath(e.image_path, base),
            }
            for e in manifest.entries
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def relpath(target, base) -> str:
    """Path relative to base, tolerating targets outside the base tree."""
    target = Path(target).resolve()
    try:
        return str(target.relative_to(base))
    except ValueError:
        import os

        return os.path.relpath(target, base)


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or doc.get("version") != MANIFEST_VERSION:
        raise DocumentError("manifest.version", f"unsupported: {doc.get('version')!r}")
    for key in ("canvas", "palette", "entries"):
        if key not in doc:
            raise DocumentError(f"manifest.{key}", "missing")
    base = path.parent.resolve()
    entries = []
    seen = set()
    for i, e in enumerate(doc["entries"]):
        for key in ("entry_id", "contour", "mask", "image"):
            if key not in e:
                raise DocumentError(f"manifest.entries[{i}].{key}", "missing")
        if e["entry_id"] in seen:
            raise DocumentError(f"manifest.entries[{i}].entry_id", f"duplicate {e['entry_id']!r}")
        seen.add(e["entry_id"])
        entries.append(
            DatasetEntry(
                entry_id=e["entry_id"],
                contour_path=base / e["contour"],
                mask_path=base / e["mask"],
                image_path=base / e["image"],
            )
        )
    return DatasetManifest(
        entries=entries,
        palette=check_palette(doc["palette"]),
        canvas_size=(int(doc["canvas"][0]), int(doc["canvas"][1])),
    )


def build_dataset(
    mask_dir, image_dir, out_dir, palette=None, exclude_labels=()
) -> tuple[DatasetManifest, dict]:
    """Pair masks with images by basename, extract contours, write manifest.

    Orphans and undecodable files are skipped with a warning and counted in
    the returned report rather than failing the batch. ``exclude_labels``
    keeps those labels out of the corpus contour sketches.
    """
    palette = check_palette(palette if palette is not None else DEFAULT_PALETTE)
    mask_dir, image_dir, out_dir = Path(mask_dir), Path(image_dir), Path(out_dir)
    contour_dir = out_dir / "contours"
    contour_dir.mkdir(parents=True, exist_ok=True)

    masks = {p.stem: p for p in sorted(mask_dir.glob("*.png"))}
    images = {p.stem: p for p in sorted(image_dir.glob("*.png"))}
    report = {"entries": 0, "skipped": [], "warnings": []}

    for stem in sorted(set(masks) ^ set(images)):
        side = "image" if stem in masks else "mask"
        msg = f"{stem}: missing {side} counterpart, skipped"
        log.warning(msg)
        report["warnings"].append(msg)
        report["skipped"].append(stem)

    entries = []
    canvas_size = None
    for stem in sorted(set(masks) & set(images)):
        try:
            mask = load_label_mask(masks[stem], palette)
        except (ValidationError, OSError) as exc:
            msg = f"{stem}: {exc}"
            log.warning(msg)
            report["warnings"].append(msg)
            report["skipped"].append(stem)
            continue
        if canvas_size is None:
            canvas_size = mask.canvas_size
        elif mask.canvas_size != canvas_size:
            msg = f"{stem}: size {mask.canvas_size} differs from corpus {canvas_size}, skipped"
            log.warning(msg)
            report["warnings"].append(msg)
            report["skipped"].append(stem)
            continue
        contour_path = contour_dir / f"{stem}.png"
        save_binary(contour_path, extract_contours(mask, exclude=exclude_labels))
        entries.append(
            DatasetEntry(
                entry_id=stem,
                contour_path=contour_path.resolve(),
                mask_path=masks[stem].resolve(),
                image_path=images[stem].resolve(),
            )
        )

    if not entries:
        msg = "no mask/image pairs found; manifest is empty"
        log.warning(msg)
        report["warnings"].append(msg)
    if canvas_size is None:
        canvas_size = (512, 512)
    manifest = DatasetManifest(entries=entries, palette=palette, canvas_size=canvas_size)
    save_manifest(manifest, out_dir / "manifest.json")
    report["entries"] = len(entries)
    return manifest, report
