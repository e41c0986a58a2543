"""PNG/PPM reading, PNG writing, and the raw field format."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

IMAGE_SUFFIXES = (".png", ".ppm")
FIELD_MAGIC = b"GRF1"


def read_image(path) -> np.ndarray:
    """Load an 8-bit image as float64 (H, W, 3) in [0, 1]."""
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    return rgb / 255.0


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)


def write_png(path, image: np.ndarray) -> None:
    arr = to_uint8(image)
    mode = "L" if arr.ndim == 2 else "RGB"
    Image.fromarray(arr, mode=mode).save(path, format="PNG")


def field_to_gray(values: np.ndarray, alpha: float) -> np.ndarray:
    """Map [-alpha, alpha] affinely onto [0, 1]; alpha 0 maps to mid-gray."""
    if alpha <= 0:
        return np.full(values.shape, 0.5)
    return (np.asarray(values) + alpha) / (2.0 * alpha)


def write_field_raw(path, values: np.ndarray) -> None:
    """16-byte header (magic, u32 width, u32 height, u32 reserved) + LE float32 rows."""
    values = np.asarray(values)
    height, width = values.shape
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC + struct.pack("<III", width, height, 0))
        fh.write(values.astype("<f4").tobytes(order="C"))


def read_field_raw(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != FIELD_MAGIC:
        raise ValueError(f"{path}: not a GRF1 field file")
    width, height, _ = struct.unpack("<III", data[4:16])
    expected = 16 + 4 * width * height
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    return np.frombuffer(data, dtype="<f4", offset=16).reshape(height, width).astype(np.float64)


def list_images(path) -> list:
    path = Path(path)
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())
    return [path]
