"""Bounded, zero-mean isotropic Gaussian random fields on a pixel grid.

Fields are synthesized in the frequency domain: real white noise is drawn
on the grid, transformed with a real FFT (which makes the spectrum
Hermitian by construction), each mode is filtered by ``sqrt(P(k))`` with
``P(k) = k**-gamma``, and the result is transformed back. The DC mode is
dropped so every field has zero mean, then the field is rescaled so that
its largest magnitude equals ``alpha``.

Randomness comes from ``numpy.random.Generator(PCG64(seed))`` using
``standard_normal`` in float64; this generator is stable across platforms
for a given numpy major release.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FieldSpec:
    """Parameters of one random field realization.

    Attributes:
        width: Grid width in pixels.
        height: Grid height in pixels.
        gamma: Power-law exponent of the spectrum. Larger is smoother.
        alpha: Amplitude bound; every value satisfies ``|v| <= alpha``.
        seed: 64-bit seed of the white noise.
    """

    width: int
    height: int
    gamma: float
    alpha: float
    seed: int = 0

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise ValueError(f"field size must be >= 1, got {self.width}x{self.height}")
        if not (math.isfinite(self.gamma) and math.isfinite(self.alpha)):
            raise ValueError("gamma and alpha must be finite")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")


@dataclass(frozen=True)
class ScalarField:
    """A realized field. ``values`` has shape ``(height, width)``."""

    values: np.ndarray = field(repr=False)
    spec: FieldSpec

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def power_spectrum(k, gamma: float):
    """Power-law spectrum ``k**-gamma`` with the DC mode suppressed.

    Works on scalars and arrays. ``k`` is in cycles per grid, so ``k == 1``
    is the fundamental and has unit power for every exponent.
    """
    k = np.asarray(k, dtype=np.float64)
    out = np.zeros_like(k)
    pos = k > 0
    out[pos] = k[pos] ** (-float(gamma))
    return out if out.ndim else float(out)


def frequency_magnitude(height: int, width: int, real: bool = False) -> np.ndarray:
    """Integer-lattice frequency magnitudes ``sqrt(kx**2 + ky**2)``.

    With ``real=True`` the last axis is the half spectrum used by ``rfft2``.
    """
    ky = np.fft.fftfreq(height) * height
    if real:
        kx = np.fft.rfftfreq(width) * width
    else:
        kx = np.fft.fftfreq(width) * width
    return np.hypot(ky[:, None], kx[None, :])


def synthesize_raw(height: int, width: int, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """Unnormalized zero-mean field with spectrum ``k**-gamma``."""
    noise = rng.standard_normal((height, width))
    spectrum = np.fft.rfft2(noise)
    spectrum *= np.sqrt(power_spectrum(frequency_magnitude(height, width, real=True), gamma))
    return np.fft.irfft2(spectrum, s=(height, width))


def synthesize_field(spec: FieldSpec) -> ScalarField:
    """Draw the field described by ``spec``.

    The output is a deterministic function of ``spec``. For ``alpha > 0``
    on grids with more than one pixel, ``max |v| == alpha`` exactly.
    """
    rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
    raw = synthesize_raw(int(spec.height), int(spec.width), spec.gamma, rng)
    peak_index = np.unravel_index(np.argmax(np.abs(raw)), raw.shape)
    peak = float(abs(raw[peak_index]))
    if spec.alpha == 0 or peak == 0:
        values = np.zeros_like(raw)
    else:
        values = raw * (spec.alpha / peak)
        # guard against one-ulp overshoot and pin the extremum to the bound
        np.clip(values, -spec.alpha, spec.alpha, out=values)
        values[peak_index] = math.copysign(spec.alpha, raw[peak_index])
    values.setflags(write=False)
    return ScalarField(values=values, spec=spec)


def constant_field(width: int, height: int, value: float) -> ScalarField:
    """A field holding one value everywhere; turns local transforms global."""
    values = np.full((height, width), float(value))
    values.setflags(write=False)
    return ScalarField(values=values, spec=FieldSpec(width, height, 0.0, abs(float(value))))
