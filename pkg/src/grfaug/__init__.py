"""Local image augmentations driven by Gaussian random fields."""
from .grf import FieldSpec, ScalarField, power_spectrum, synthesize_field
from .warp import (
    Interpolation,
    LocalTransform,
    Padding,
    PixelAffineGrid,
    SamplingPolicy,
    SpatialKind,
    apply_pixel_affine,
    build_pixel_affine,
    compose_grids,
)
from .color import ColorFieldTriple, apply_local_color, hsv_to_rgb, rgb_to_hsv
from .pipeline import (
    AugmentConfig,
    SampledTransform,
    TransformKind,
    apply_sampled,
    augment_batch,
    resize_bilinear,
    sample_transform,
)
from .spectral import SpectrumEstimate, fit_power_law, radial_power_spectrum

__version__ = "0.1.0"
