"""Seeded per-image sampling and application of local transforms."""
from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import color, warp
from .grf import FieldSpec, ScalarField, synthesize_field
from .warp import Interpolation, Padding, SamplingPolicy, SpatialKind

PAPER_GAMMA_RANGE = (7.0, 10.0)
PAPER_ALPHA_RANGE = (0.0, 1.0 / 3.0)
PAPER_PROBABILITY = 0.8
PAPER_RESIZE = (224, 224)

# the grid searched over gamma and alpha intervals
GAMMA_GRID = ((3.0, 7.0), (7.0, 10.0), (3.0, 10.0))
ALPHA_GRID = ((0.0, 1.0 / 3.0), (0.0, 2.0 / 3.0), (0.0, 1.0))


class TransformKind(str, enum.Enum):
    ROTATE = "rotate"
    SCALE = "scale"
    SHEAR = "shear"
    TRANSLATE = "translate"
    COLOR = "color"

    @property
    def n_fields(self) -> int:
        return {"rotate": 1, "color": 3}.get(self.value, 2)

    @property
    def spatial(self) -> bool:
        return self is not TransformKind.COLOR


ALL_KINDS = tuple(TransformKind)


class ConfigError(ValueError):
    pass


class AugmentError(RuntimeError):
    """Failure while augmenting one image of a batch."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"image {index}: {cause}")
        self.index = index
        self.cause = cause


def _range(value, name) -> Tuple[float, float]:
    try:
        low, high = (float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a [low, high] pair, got {value!r}") from None
    if not (math.isfinite(low) and math.isfinite(high)):
        raise ConfigError(f"{name} must be finite")
    if low > high:
        raise ConfigError(f"{name} low > high: {low} > {high}")
    return low, high


@dataclass(frozen=True)
class AugmentConfig:
    """Immutable augmentation settings; defaults are gamma in [7, 10], alpha in [0, 1/3], p = 0.8."""

    gamma_range: Tuple[float, float] = PAPER_GAMMA_RANGE
    alpha_range: Tuple[float, float] = PAPER_ALPHA_RANGE
    probability: float = PAPER_PROBABILITY
    transforms: Tuple[TransformKind, ...] = (TransformKind.TRANSLATE,)
    composition_size: int = 1
    interpolation: Interpolation = Interpolation.BILINEAR
    padding: Padding = Padding.EDGE_CLAMP
    resize_to: Optional[Tuple[int, int]] = None
    seed: int = 0

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "gamma_range", _range(self.gamma_range, "gamma_range"))
        set_(self, "alpha_range", _range(self.alpha_range, "alpha_range"))
        if self.gamma_range[0] < 0:
            raise ConfigError("gamma_range must be non-negative")
        if self.alpha_range[0] < 0:
            raise ConfigError("alpha_range low must be >= 0")
        p = float(self.probability)
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"probability must be in [0, 1], got {p}")
        set_(self, "probability", p)
        if isinstance(self.transforms, (str, TransformKind)):
            set_(self, "transforms", (self.transforms,))
        try:
            kinds = tuple(TransformKind(k) for k in self.transforms)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not kinds:
            raise ConfigError("transforms must be non-empty")
        if len(set(kinds)) != len(kinds):
            raise ConfigError("transforms contains duplicates")
        set_(self, "transforms", kinds)
        n = self.composition_size
        if isinstance(n, bool) or int(n) != n or n < 1:
            raise ConfigError(f"composition_size must be an integer >= 1, got {n!r}")
        set_(self, "composition_size", int(n))
        if n > len(kinds):
            raise ConfigError(f"composition_size {n} exceeds the {len(kinds)} available transforms")
        try:
            set_(self, "interpolation", Interpolation(self.interpolation))
            set_(self, "padding", Padding(self.padding))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.resize_to is not None:
            try:
                w, h = (int(v) for v in self.resize_to)
            except (TypeError, ValueError):
                raise ConfigError(f"resize_to must be [width, height], got {self.resize_to!r}") from None
            if w < 1 or h < 1:
                raise ConfigError("resize_to dimensions must be >= 1")
            set_(self, "resize_to", (w, h))
        seed = self.seed
        if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        set_(self, "seed", int(seed))

    @property
    def sampling(self) -> SamplingPolicy:
        return SamplingPolicy(self.interpolation, self.padding)

    def to_dict(self) -> dict:
        return {
            "gamma_range": list(self.gamma_range),
            "alpha_range": list(self.alpha_range),
            "probability": self.probability,
            "transforms": [k.value for k in self.transforms],
            "composition_size": self.composition_size,
            "interpolation": self.interpolation.value,
            "padding": self.padding.value,
            "resize_to": list(self.resize_to) if self.resize_to else None,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "AugmentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)


@dataclass(frozen=True)
class TransformDraw:
    """One constituent of a sampled transform."""

    kind: TransformKind
    gamma: float
    drawn_alpha: float
    alpha: float
    seeds: Tuple[int, ...]

    def field_specs(self, width: int, height: int) -> List[FieldSpec]:
        return [FieldSpec(width, height, self.gamma, self.alpha, s) for s in self.seeds]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "gamma": self.gamma,
            "drawn_alpha": self.drawn_alpha,
            "alpha": self.alpha,
            "seeds": list(self.seeds),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TransformDraw":
        kind = TransformKind(data["kind"])
        seeds = tuple(int(s) for s in data["seeds"])
        if len(seeds) != kind.n_fields:
            raise ConfigError(f"{kind.value} needs {kind.n_fields} seeds, got {len(seeds)}")
        return cls(kind, float(data["gamma"]), float(data["drawn_alpha"]), float(data["alpha"]), seeds)


@dataclass(frozen=True)
class SampledTransform:
    draws: Tuple[TransformDraw, ...]

    @property
    def kinds(self) -> Tuple[TransformKind, ...]:
        return tuple(d.kind for d in self.draws)

    def to_dict(self) -> dict:
        return {"draws": [d.to_dict() for d in self.draws]}

    @classmethod
    def from_dict(cls, data: dict) -> "SampledTransform":
        return cls(tuple(TransformDraw.from_dict(d) for d in data["draws"]))


def image_rng(seed: int, image_index: int) -> np.random.Generator:
    """Independent PCG64 stream for one image, keyed by (seed, index)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(image_index),))
    return np.random.Generator(np.random.PCG64(ss))


def sample_transform(config: AugmentConfig, image_index: int) -> Optional[SampledTransform]:
    """Draw the transform for one image, or ``None`` if it is skipped.

    Draw order inside the image's stream is fixed: Bernoulli, kinds, order
    permutation, gammas, alphas, field seeds.
    """
    if image_index < 0:
        raise ValueError("image_index must be >= 0")
    rng = image_rng(config.seed, image_index)
    if not rng.random() < config.probability:
        return None
    n = config.composition_size
    picked = rng.choice(len(config.transforms), size=n, replace=False)
    order = rng.permutation(n)
    kinds = [config.transforms[int(picked[i])] for i in order]
    gammas = rng.uniform(*config.gamma_range, size=n)
    alphas = rng.uniform(*config.alpha_range, size=n)
    scale = 1.0 / math.sqrt(n)
    draws = []
    for kind, gamma, alpha in zip(kinds, gammas, alphas):
        seeds = tuple(int(s) for s in rng.integers(0, 2**63, size=kind.n_fields, dtype=np.uint64))
        draws.append(TransformDraw(kind, float(gamma), float(alpha), float(alpha) * scale, seeds))
    return SampledTransform(tuple(draws))


FieldFactory = Callable[[FieldSpec], ScalarField]


def apply_sampled(image: np.ndarray, t: Optional[SampledTransform],
                  policy: SamplingPolicy = SamplingPolicy(),
                  field_factory: FieldFactory = synthesize_field) -> np.ndarray:
    """Apply a sampled transform to ``image`` (H, W, 3).

    Spatial constituents are composed in their sampled order and warped in
    one pass; color constituents follow as separate passes.
    """
    image = np.asarray(image, dtype=np.float64)
    if t is None or not t.draws:
        return image.copy()
    height, width = image.shape[:2]
    grids = []
    color_passes = []
    for draw in t.draws:
        fields = [field_factory(spec) for spec in draw.field_specs(width, height)]
        for f in fields:
            if f.values.shape != (height, width):
                raise ValueError(f"field {f.values.shape} does not match image {(height, width)}")
        if draw.kind.spatial:
            local = warp.LocalTransform(SpatialKind(draw.kind.value), tuple(fields))
            grids.append(warp.build_pixel_affine(local))
        else:
            color_passes.append(color.ColorFieldTriple(*fields))
    out = image
    if grids:
        out = warp.apply_pixel_affine(out, warp.compose_grids(grids), policy)
    for triple in color_passes:
        out = color.apply_local_color(out, triple)
    return out if out is not image else image.copy()


def resize_bilinear(image: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize with pixel-center alignment and edge replication."""
    if width < 1 or height < 1:
        raise ValueError(f"target size must be >= 1, got {width}x{height}")
    image = np.asarray(image, dtype=np.float64)
    in_h, in_w = image.shape[:2]
    if (in_w, in_h) == (width, height):
        return image.copy()
    xs = (np.arange(width) + 0.5) * (in_w / width) - 0.5
    ys = (np.arange(height) + 0.5) * (in_h / height) - 0.5
    xs, ys = np.meshgrid(xs, ys)
    return warp.sample(image, xs, ys, SamplingPolicy(Interpolation.BILINEAR, Padding.EDGE_CLAMP))


_SAMPLE = object()


def augment_one(image: np.ndarray, config: AugmentConfig, image_index: int,
                t=_SAMPLE) -> np.ndarray:
    """Resize (if configured) and apply the image's sampled transform.

    Pass ``t`` to apply a previously recorded transform (``None`` meaning
    "not applied") instead of sampling one from ``image_index``.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {image.shape}")
    if config.resize_to is not None:
        image = resize_bilinear(image, *config.resize_to)
    if t is _SAMPLE:
        t = sample_transform(config, image_index)
    return apply_sampled(image, t, config.sampling)


def augment_batch(images: Sequence[np.ndarray], config: AugmentConfig, threads: int = 1,
                  first_index: int = 0) -> List[np.ndarray]:
    """Augment every image; image ``i`` uses stream ``first_index + i``.

    Results do not depend on ``threads``.
    """
    def work(item):
        i, img = item
        try:
            return augment_one(img, config, first_index + i)
        except Exception as exc:
            raise AugmentError(first_index + i, exc) from exc

    items = list(enumerate(images))
    if threads <= 1 or len(items) <= 1:
        return [work(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, items))
