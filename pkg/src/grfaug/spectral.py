"""Radially averaged power spectra and power-law slope fits."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .grf import FieldSpec, ScalarField, frequency_magnitude, power_spectrum, synthesize_field


@dataclass(frozen=True)
class SpectrumEstimate:
    k_bins: np.ndarray
    power: np.ndarray
    fitted_slope: Optional[float] = None
    fit_range: Optional[tuple] = None

    def __post_init__(self):
        if len(self.k_bins) != len(self.power) or len(self.k_bins) < 2:
            raise ValueError("k_bins and power need equal length >= 2")


def _as_values(field) -> np.ndarray:
    values = field.values if isinstance(field, ScalarField) else np.asarray(field)
    if values.ndim != 2:
        raise ValueError("expected a 2-D field")
    return values


def default_bins(height: int, width: int) -> int:
    return max(2, min(height, width) // 4)


def _annuli(height: int, width: int, n_bins: int):
    if min(height, width) < 4:
        raise ValueError(f"field must be at least 4x4, got {width}x{height}")
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    k = frequency_magnitude(height, width)
    # largest radius fully inside the lattice on both axes
    k_max = min(height, width) // 2
    if n_bins > k_max:
        raise ValueError(f"n_bins={n_bins} exceeds the {k_max} available annuli")
    edges = np.linspace(0.0, float(k_max), n_bins + 1)
    # half-open (lo, hi]: the DC mode falls in no bin
    index = np.searchsorted(edges, k, side="left") - 1
    index[(k == 0) | (k > k_max)] = -1
    return k, index


def radial_power_spectrum(field, n_bins: Optional[int] = None) -> SpectrumEstimate:
    """Mean squared FFT magnitude in linear annuli of ``k``, DC excluded.

    Bin centers are the mean ``k`` of the lattice modes inside each annulus.
    """
    return ensemble_power_spectrum([field], n_bins)


def ensemble_power_spectrum(fields: Iterable, n_bins: Optional[int] = None) -> SpectrumEstimate:
    """Average of :func:`radial_power_spectrum` over several same-size fields."""
    total = None
    count = 0
    for f in fields:
        values = _as_values(f)
        power2d = np.abs(np.fft.fft2(values)) ** 2
        if total is not None and total.shape != power2d.shape:
            raise ValueError("ensemble fields must share a shape")
        total = power2d if total is None else total + power2d
        count += 1
    if count == 0:
        raise ValueError("no fields given")
    height, width = total.shape
    if n_bins is None:
        n_bins = default_bins(height, width)
    k, index = _annuli(height, width, n_bins)
    mask = index >= 0
    counts = np.bincount(index[mask], minlength=n_bins)
    k_sum = np.bincount(index[mask], weights=k[mask], minlength=n_bins)
    p_sum = np.bincount(index[mask], weights=total[mask], minlength=n_bins)
    return SpectrumEstimate(k_bins=k_sum / counts, power=p_sum / counts / count)


def default_fit_range(estimate: SpectrumEstimate) -> tuple:
    """Skip the lowest annulus and the top 20% of frequencies."""
    k = np.asarray(estimate.k_bins)
    return float(k[1]), float(0.8 * k[-1])


def fit_power_law(estimate: SpectrumEstimate, fit_range: Optional[Sequence[float]] = None) -> float:
    """Least-squares slope of ``log(power)`` against ``log(k)`` inside ``fit_range``."""
    if fit_range is None:
        fit_range = default_fit_range(estimate)
    k_min, k_max = fit_range
    k = np.asarray(estimate.k_bins, dtype=np.float64)
    p = np.asarray(estimate.power, dtype=np.float64)
    sel = (k >= k_min) & (k <= k_max)
    if np.count_nonzero(sel) < 2:
        raise ValueError(f"fewer than two bins inside k range [{k_min}, {k_max}]")
    if np.any(p[sel] <= 0):
        raise ValueError("zero power inside the fit range")
    slope, _ = np.polyfit(np.log(k[sel]), np.log(p[sel]), 1)
    return float(slope)


def with_fit(estimate: SpectrumEstimate, fit_range: Optional[Sequence[float]] = None) -> SpectrumEstimate:
    if fit_range is None:
        fit_range = default_fit_range(estimate)
    slope = fit_power_law(estimate, fit_range)
    return replace(estimate, fitted_slope=slope, fit_range=tuple(float(v) for v in fit_range))


def expected_power(estimate: SpectrumEstimate, gamma: float) -> np.ndarray:
    """Analytic ``k**-gamma`` scaled to the estimate by a log-space fit over its fit range."""
    k = np.asarray(estimate.k_bins)
    model = power_spectrum(k, gamma)
    lo, hi = estimate.fit_range or default_fit_range(estimate)
    sel = (k >= lo) & (k <= hi) & (estimate.power > 0)
    if not np.any(sel):
        return model
    log_scale = np.mean(np.log(estimate.power[sel]) - np.log(model[sel]))
    return model * np.exp(log_scale)


def ensemble_slope(gamma: float, size: int = 256, trials: int = 64, seed: int = 0,
                   fit_range: Optional[Sequence[float]] = None) -> SpectrumEstimate:
    """Synthesize ``trials`` fields at ``gamma`` and fit their mean spectrum."""
    fields = (
        synthesize_field(FieldSpec(size, size, gamma, 1.0, seed + t)) for t in range(trials)
    )
    return with_fit(ensemble_power_spectrum(fields), fit_range)
