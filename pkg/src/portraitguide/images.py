"""Raster file helpers (8-bit grayscale PNG in, numpy arrays out)."""

import io

import numpy as np
from PIL import Image

from .errors import FormatError


def load_gray(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise FormatError(f"cannot read image {path}: {exc}") from exc


def load_labels(path) -> np.ndarray:
    """Read a label raster without any palette or channel conversion."""
    try:
        with Image.open(path) as im:
            if im.mode not in ("L", "P"):
                raise FormatError(f"{path}: expected 8-bit single-channel, got mode {im.mode}")
            arr = np.asarray(im, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except FormatError:
        raise
    except Exception as exc:
        raise FormatError(f"cannot read label raster {path}: {exc}") from exc
    if arr.ndim != 2:
        raise FormatError(f"{path}: expected 2-D raster, got shape {arr.shape}")
    return arr


def load_binary(path) -> np.ndarray:
    return load_gray(path) > 127


def save_gray(path, arr) -> None:
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="L").save(path)


def save_binary(path, mask) -> None:
    save_gray(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))


def png_bytes(arr) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def gray_from_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)
