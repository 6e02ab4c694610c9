"""Synthetic face corpus generator.

Produces parametric label masks and matching grayscale portraits so the
whole pipeline can be exercised (demos, CI) without any external dataset.
Faces vary in position, proportions, and part shapes per entry, driven by a
seeded RNG.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .images import save_gray
from .maskdata import DEFAULT_PALETTE

# label ids used by generated faces (a subset of the default palette)
SKIN, L_BROW, R_BROW, L_EYE, R_EYE, NOSE, MOUTH, HAIR = 1, 2, 3, 4, 5, 10, 11, 17


def _paint_ellipse(labels, value, cx, cy, rx, ry):
    h, w = labels.shape
    x0 = max(int(np.floor(cx - rx)), 0)
    x1 = min(int(np.ceil(cx + rx)) + 1, w)
    y0 = max(int(np.floor(cy - ry)), 0)
    y1 = min(int(np.ceil(cy + ry)) + 1, h)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    inside = ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0
    labels[y0:y1, x0:x1][inside] = value


def face_parameters(rng: np.random.Generator, size: int = 512) -> dict:
    s = size / 512.0
    cx = size / 2 + rng.uniform(-20, 20) * s
    cy = size / 2 + rng.uniform(-10, 25) * s
    fw = rng.uniform(115, 150) * s  # face half-width
    fh = rng.uniform(150, 185) * s
    eye_dx = fw * rng.uniform(0.42, 0.52)
    eye_y = cy - fh * rng.uniform(0.12, 0.22)
    eye_rx = fw * rng.uniform(0.14, 0.20)
    eye_ry = eye_rx * rng.uniform(0.45, 0.65)
    return {
        "size": size,
        "face": (cx, cy, fw, fh),
        "hair": (cx, cy - fh * 0.45, fw * rng.uniform(1.05, 1.2), fh * rng.uniform(0.75, 0.95)),
        "l_eye": (cx - eye_dx, eye_y, eye_rx, eye_ry),
        "r_eye": (cx + eye_dx, eye_y, eye_rx, eye_ry),
        "l_brow": (cx - eye_dx, eye_y - eye_ry - 14 * s, eye_rx * 1.15, 4.5 * s),
        "r_brow": (cx + eye_dx, eye_y - eye_ry - 14 * s, eye_rx * 1.15, 4.5 * s),
        "nose": (cx, cy + fh * rng.uniform(0.05, 0.12), fw * 0.11, fh * rng.uniform(0.14, 0.2)),
        "mouth": (
            cx,
            cy + fh * rng.uniform(0.42, 0.52),
            fw * rng.uniform(0.30, 0.42),
            fh * rng.uniform(0.045, 0.075),
        ),
    }


def face_mask(params: dict) -> np.ndarray:
    size = params["size"]
    labels = np.zeros((size, size), dtype=np.uint8)
    _paint_ellipse(labels, HAIR, *params["hair"])
    _paint_ellipse(labels, SKIN, *params["face"])
    for key, value in (
        ("l_brow", L_BROW),
        ("r_brow", R_BROW),
        ("l_eye", L_EYE),
        ("r_eye", R_EYE),
        ("nose", NOSE),
        ("mouth", MOUTH),
    ):
        _paint_ellipse(labels, value, *params[key])
    return labels


_TONES = {
    0: 235,
    SKIN: 182,
    HAIR: 60,
    L_BROW: 75,
    R_BROW: 75,
    L_EYE: 38,
    R_EYE: 38,
    NOSE: 160,
    MOUTH: 118,
}


def face_image(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    size = labels.shape[0]
    img = np.zeros(labels.shape, dtype=float)
    jitter = {k: v + rng.uniform(-12, 12) for k, v in _TONES.items()}
    for k, tone in jitter.items():
        img[labels == k] = tone
    # soft vertical light falloff keeps the portraits from looking flat
    ys = np.linspace(-1, 1, size)[:, None]
    img = img * (1.0 - 0.08 * ys**2)
    return np.clip(img, 0, 255).astype(np.uint8)


def make_corpus(out_dir, count: int, seed: int = 0, size: int = 512) -> dict:
    """Write masks/ and images/ under out_dir; returns a summary report."""
    out_dir = Path(out_dir)
    mask_dir = out_dir / "masks"
    image_dir = out_dir / "images"
    mask_dir.mkdir(parents=True, exist_ok=True)
    image_dir.mkdir(parents=True, exist_ok=True)
    root = np.random.default_rng(seed)
    for i in range(count):
        rng = np.random.default_rng(root.integers(2**63))
        params = face_parameters(rng, size=size)
        labels = face_mask(params)
        save_gray(mask_dir / f"face{i:04d}.png", labels)
        save_gray(image_dir / f"face{i:04d}.png", face_image(labels, rng))
    return {
        "count": count,
        "size": size,
        "masks": str(mask_dir),
        "images": str(image_dir),
        "palette": dict(DEFAULT_PALETTE),
    }
