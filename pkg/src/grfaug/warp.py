"""Per-pixel affine warps driven by random fields.

Every target pixel owns a 2x3 matrix that maps its normalized coordinates
to a source location; the output is sampled from the input there
(backward mapping, so the target is always fully covered). Coordinates
are normalized per axis to ``[-1, 1]`` with the origin at the image
center.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grf import ScalarField


class SpatialKind(str, enum.Enum):
    ROTATE = "rotate"
    SCALE = "scale"
    SHEAR = "shear"
    TRANSLATE = "translate"

    @property
    def n_fields(self) -> int:
        return 1 if self is SpatialKind.ROTATE else 2


class Interpolation(str, enum.Enum):
    BILINEAR = "bilinear"
    NEAREST = "nearest"


class Padding(str, enum.Enum):
    EDGE_CLAMP = "edge"
    ZERO_FILL = "zero"


@dataclass(frozen=True)
class SamplingPolicy:
    interpolation: Interpolation = Interpolation.BILINEAR
    padding: Padding = Padding.EDGE_CLAMP

    def __post_init__(self):
        object.__setattr__(self, "interpolation", Interpolation(self.interpolation))
        object.__setattr__(self, "padding", Padding(self.padding))


@dataclass(frozen=True)
class LocalTransform:
    """A spatial transform kind with the field(s) it consumes.

    Rotate takes one field ``g``; the others take ``(g_x, g_y)``.
    """

    kind: SpatialKind
    fields: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", SpatialKind(self.kind))
        object.__setattr__(self, "fields", tuple(self.fields))
        if len(self.fields) != self.kind.n_fields:
            raise ValueError(f"{self.kind.value} needs {self.kind.n_fields} field(s), got {len(self.fields)}")
        shapes = {_field_values(f).shape for f in self.fields}
        if len(shapes) != 1:
            raise ValueError(f"field dimensions differ: {sorted(shapes)}")


@dataclass(frozen=True)
class PixelAffineGrid:
    """Per-pixel affine matrices, shape ``(height, width, 2, 3)``."""

    matrices: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = self.matrices
        if m.ndim != 4 or m.shape[2:] != (2, 3):
            raise ValueError(f"expected (H, W, 2, 3) matrices, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("affine grid has non-finite entries")

    @property
    def height(self) -> int:
        return self.matrices.shape[0]

    @property
    def width(self) -> int:
        return self.matrices.shape[1]

    @classmethod
    def identity(cls, width: int, height: int) -> "PixelAffineGrid":
        m = np.zeros((height, width, 2, 3))
        m[..., 0, 0] = 1.0
        m[..., 1, 1] = 1.0
        return cls(m)

    @classmethod
    def constant(cls, width: int, height: int, matrix) -> "PixelAffineGrid":
        m = np.broadcast_to(np.asarray(matrix, dtype=np.float64), (height, width, 2, 3)).copy()
        return cls(m)


def _field_values(f) -> np.ndarray:
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=np.float64)


def build_pixel_affine(transform: LocalTransform) -> PixelAffineGrid:
    """Fill per-pixel matrices for one local transform.

    ========= ===================================
    rotate    [[cos pi g, -sin pi g, 0], [sin pi g, cos pi g, 0]]
    scale     [[1 + g_x, 0, 0], [0, 1 + g_y, 0]]
    shear     [[1, g_x, 0], [g_y, 1, 0]]
    translate [[1, 0, g_x], [0, 1, g_y]]
    ========= ===================================
    """
    values = [_field_values(f) for f in transform.fields]
    height, width = values[0].shape
    m = np.zeros((height, width, 2, 3))
    kind = transform.kind
    if kind is SpatialKind.ROTATE:
        angle = np.pi * values[0]
        c, s = np.cos(angle), np.sin(angle)
        m[..., 0, 0] = c
        m[..., 0, 1] = -s
        m[..., 1, 0] = s
        m[..., 1, 1] = c
    else:
        gx, gy = values
        m[..., 0, 0] = 1.0
        m[..., 1, 1] = 1.0
        if kind is SpatialKind.SCALE:
            m[..., 0, 0] += gx
            m[..., 1, 1] += gy
        elif kind is SpatialKind.SHEAR:
            m[..., 0, 1] = gx
            m[..., 1, 0] = gy
        else:
            m[..., 0, 2] = gx
            m[..., 1, 2] = gy
    return PixelAffineGrid(m)


def compose_grids(grids: Sequence[PixelAffineGrid]) -> PixelAffineGrid:
    """Per-pixel product of the grids' homogeneous 3x3 forms, left to right."""
    if not grids:
        raise ValueError("cannot compose an empty list of grids")
    shape = grids[0].matrices.shape
    for g in grids[1:]:
        if g.matrices.shape != shape:
            raise ValueError(f"grid dimensions differ: {shape[:2]} vs {g.matrices.shape[:2]}")
    if len(grids) == 1:
        return grids[0]
    acc = grids[0].matrices.copy()
    for g in grids[1:]:
        b = g.matrices
        lin = acc[..., :, :2] @ b[..., :, :2]
        shift = (acc[..., :, :2] @ b[..., :, 2:3])[..., 0] + acc[..., :, 2]
        acc = np.concatenate([lin, shift[..., None]], axis=-1)
    return PixelAffineGrid(acc)


def _normalized_axis(n: int) -> tuple:
    """Pixel index -> [-1, 1] coordinate, plus the half extent in pixels."""
    half = (n - 1) / 2.0
    idx = np.arange(n, dtype=np.float64)
    if n == 1:
        return np.zeros(1), 0.0
    return (idx - half) / half, half


def source_coordinates(grid: PixelAffineGrid) -> tuple:
    """Source pixel coordinates ``(xs, ys)`` for every target pixel.

    Written as an offset from the target index so identity matrices map
    each pixel exactly onto itself.
    """
    height, width = grid.height, grid.width
    xt, hx = _normalized_axis(width)
    yt, hy = _normalized_axis(height)
    xt = xt[None, :]
    yt = yt[:, None]
    m = grid.matrices
    dx = (m[..., 0, 0] - 1.0) * xt + m[..., 0, 1] * yt + m[..., 0, 2]
    dy = m[..., 1, 0] * xt + (m[..., 1, 1] - 1.0) * yt + m[..., 1, 2]
    xs = np.arange(width, dtype=np.float64)[None, :] + hx * dx
    ys = np.arange(height, dtype=np.float64)[:, None] + hy * dy
    return xs, ys


def sample(image: np.ndarray, xs: np.ndarray, ys: np.ndarray, policy: SamplingPolicy) -> np.ndarray:
    """Sample ``image`` (H, W, C) at fractional pixel coordinates."""
    height, width = image.shape[:2]
    zero = policy.padding is Padding.ZERO_FILL
    if policy.interpolation is Interpolation.NEAREST:
        xi = np.floor(xs + 0.5).astype(np.intp)
        yi = np.floor(ys + 0.5).astype(np.intp)
        out = image[np.clip(yi, 0, height - 1), np.clip(xi, 0, width - 1)]
        if zero:
            inside = (xi >= 0) & (xi < width) & (yi >= 0) & (yi < height)
            out = np.where(inside[..., None], out, 0.0)
        return out

    if not zero:
        # clamping the coordinate is the same as replicating the border
        xs = np.clip(xs, 0.0, width - 1)
        ys = np.clip(ys, 0.0, height - 1)
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = (xs - x0)[..., None]
    fy = (ys - y0)[..., None]
    x0 = x0.astype(np.intp)
    y0 = y0.astype(np.intp)
    x1 = x0 + 1
    y1 = y0 + 1

    def tap(yi, xi):
        v = image[np.clip(yi, 0, height - 1), np.clip(xi, 0, width - 1)]
        if zero:
            inside = (xi >= 0) & (xi < width) & (yi >= 0) & (yi < height)
            v = np.where(inside[..., None], v, 0.0)
        return v

    top = tap(y0, x0) * (1.0 - fx) + tap(y0, x1) * fx
    bottom = tap(y1, x0) * (1.0 - fx) + tap(y1, x1) * fx
    out = top * (1.0 - fy) + bottom * fy
    return np.clip(out, 0.0, 1.0, out=out)


def apply_pixel_affine(image: np.ndarray, grid: PixelAffineGrid,
                       policy: SamplingPolicy = SamplingPolicy()) -> np.ndarray:
    """Backward-map ``image`` through ``grid``; output has the input's shape."""
    image = np.asarray(image, dtype=np.float64)
    if image.shape[:2] != (grid.height, grid.width):
        raise ValueError(
            f"image is {image.shape[1]}x{image.shape[0]} but grid is {grid.width}x{grid.height}"
        )
    xs, ys = source_coordinates(grid)
    return sample(image, xs, ys, policy)
