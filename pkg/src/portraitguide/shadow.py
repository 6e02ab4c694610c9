"""Shadow guidance: blend retrieved contour sketches into one underlay."""

import numpy as np

from .errors import ValidationError
from .images import png_bytes
from .validation import check_binary_raster, check_weights


def blend_shadow(contours, weights=None) -> np.ndarray:
    """Pixelwise weighted mean of binary contours, intensities in [0, 1].

    Weights are normalized to sum 1; by default all inputs count equally.
    """
    if not contours:
        raise ValidationError("need at least one contour to blend")
    rasters = [check_binary_raster(c) for c in contours]
    shape = rasters[0].shape
    for i, r in enumerate(rasters[1:], start=1):
        if r.shape != shape:
            raise ValidationError(f"contour {i} shape {r.shape} != {shape}")
    w = check_weights(weights, len(rasters)) if weights is not None else (
        np.full(len(rasters), 1.0 / len(rasters))
    )
    out = np.zeros(shape, dtype=float)
    for r, wi in zip(rasters, w):
        out += wi * r
    return np.clip(out, 0.0, 1.0)


def shadow_png(shadow: np.ndarray) -> bytes:
    """Serialize as 8-bit grayscale, dark ink on white (0 = strongest)."""
    byte = 255 - np.rint(np.clip(shadow, 0.0, 1.0) * 255).astype(np.uint8)
    return png_bytes(byte)
