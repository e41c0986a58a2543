"""Local color jitter in HSV space.

All channels live in [0, 1], hue included (one full turn is 1.0).
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .grf import ScalarField


class ColorFieldTriple(NamedTuple):
    hue: object
    saturation: object
    value: object


def rgb_to_hsv(rgb):
    """Convert RGB in [0, 1] to HSV with hue in [0, 1).

    Accepts a single pixel or any array whose last axis has length 3.
    Gray pixels get hue 0.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    delta = v - rgb.min(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(v > 0, delta / v, 0.0)
        rc = (v - r) / delta
        gc = (v - g) / delta
        bc = (v - b) / delta
    h = np.where(r == v, bc - gc, np.where(g == v, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(delta > 0, (h / 6.0) % 1.0, 0.0)
    # (h / 6) % 1 can round up to exactly 1.0 for tiny negative h
    h = np.where(h >= 1.0, 0.0, h)
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv):
    """Inverse of :func:`rgb_to_hsv`; hue is wrapped modulo 1."""
    hsv = np.asarray(hsv, dtype=np.float64)
    h = hsv[..., 0] % 1.0
    s = hsv[..., 1]
    v = hsv[..., 2]
    h6 = h * 6.0
    sector = np.floor(h6).astype(np.intp) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(sector, [v, q, p, p, t, v])
    g = np.choose(sector, [t, v, v, q, p, p])
    b = np.choose(sector, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=np.float64)


def shift_hsv(hsv: np.ndarray, dh, ds, dv) -> np.ndarray:
    """Add offsets to HSV channels: hue wraps, saturation and value clamp."""
    h = (hsv[..., 0] + dh) % 1.0
    s = np.clip(hsv[..., 1] + ds, 0.0, 1.0)
    v = np.clip(hsv[..., 2] + dv, 0.0, 1.0)
    return np.stack([h, s, v], axis=-1)


def apply_local_color(image: np.ndarray, fields: ColorFieldTriple) -> np.ndarray:
    """Add one random field per HSV channel of ``image`` (H, W, 3)."""
    image = np.asarray(image, dtype=np.float64)
    dh, ds, dv = (_values(f) for f in fields)
    for name, arr in zip(("hue", "saturation", "value"), (dh, ds, dv)):
        if arr.shape != image.shape[:2]:
            raise ValueError(f"{name} field is {arr.shape}, image is {image.shape[:2]}")
    if not (dh.any() or ds.any() or dv.any()):
        return image.copy()
    hsv = rgb_to_hsv(image)
    out = hsv_to_rgb(shift_hsv(hsv, dh, ds, dv))
    # pixels whose HSV did not move keep their exact RGB
    unchanged = ((hsv[..., 1] == 0) | (dh % 1.0 == 0)) & (ds == 0) & (dv == 0)
    out[unchanged] = image[unchanged]
    return np.clip(out, 0.0, 1.0, out=out)
