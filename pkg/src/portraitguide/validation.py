"""Small input-validation helpers shared across the package."""

import numpy as np

from .errors import ValidationError


def check_binary_raster(raster, canvas_size=None):
    """Coerce to a 2-D boolean ink grid, optionally enforcing (w, h)."""
    arr = np.asarray(raster)
    if arr.ndim != 2:
        raise ValidationError(f"raster must be 2-D, got shape {arr.shape}")
    if canvas_size is not None:
        w, h = canvas_size
        if arr.shape != (h, w):
            raise ValidationError(
                f"raster shape {arr.shape[::-1]} does not match canvas {canvas_size}"
            )
    return arr.astype(bool, copy=False)


def check_gray_image(img):
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValidationError(f"expected single-channel image, got shape {arr.shape}")
    return arr


def check_canvas_size(canvas_size):
    try:
        w, h = canvas_size
    except (TypeError, ValueError):
        raise ValidationError(f"canvas size must be (width, height), got {canvas_size!r}")
    if int(w) <= 0 or int(h) <= 0 or (w, h) != (int(w), int(h)):
        raise ValidationError(f"canvas size must be positive integers, got {canvas_size!r}")
    return int(w), int(h)


def check_weights(weights, n):
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValidationError(f"expected {n} weights, got shape {w.shape}")
    if np.any(w < 0):
        raise ValidationError("weights must be non-negative")
    total = float(w.sum())
    if total <= 0:
        raise ValidationError("weights must not all be zero")
    return w / total
