"""Image loading, saving, and base64 PNG transport codecs."""

from __future__ import annotations

import base64
import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ShapeError


def ensure_rgb(arr: np.ndarray) -> np.ndarray:
    """Coerce a raster to uint8 RGB (H, W, 3)."""
    arr = np.asarray(arr)
    if arr.dtype != np.uint8:
        raise ShapeError(f"expected uint8 pixels, got {arr.dtype}")
    if arr.ndim == 2:
        return np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 4:
        return arr[:, :, :3]
    raise ShapeError(f"unsupported image shape {arr.shape}")


def load_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_png(path: str | Path, arr: np.ndarray) -> None:
    Image.fromarray(ensure_rgb(arr)).save(path, format="PNG")


def save_mask_png(path: str | Path, mask_array: np.ndarray) -> None:
    """Write a boolean raster as an 8-bit grayscale 0/255 PNG."""
    gray = np.where(np.asarray(mask_array, dtype=bool), 255, 0).astype(np.uint8)
    Image.fromarray(gray, mode="L").save(path, format="PNG")


def load_mask_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("L")) > 127


def encode_png_b64(arr: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(ensure_rgb(arr)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_png_b64(data: str) -> np.ndarray:
    raw = base64.b64decode(data.encode("ascii"))
    with Image.open(io.BytesIO(raw)) as img:
        return np.asarray(img.convert("RGB"))
