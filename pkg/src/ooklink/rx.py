"""Direct detection and real-time-scope capture."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.constants import e as ELECTRON_CHARGE

from .errors import ConfigurationError
from .rng import RngStream
from .signal import ComplexEnvelope, RealWaveform, gaussian_lowpass, resample


@dataclass(frozen=True)
class PhotodiodeSpec:
    responsivity: float = 0.6
    bandwidth_f3db: float = 100e9
    thermal_current_density: float = 100e-12
    shot_noise_enabled: bool = True

    def __post_init__(self):
        if not 0 < self.responsivity <= 1.5:
            raise ConfigurationError(f"responsivity {self.responsivity} A/W outside (0, 1.5]")
        if not self.bandwidth_f3db > 0:
            raise ConfigurationError("photodiode bandwidth must be > 0")
        if self.thermal_current_density < 0:
            raise ConfigurationError("thermal current density must be >= 0")


@dataclass(frozen=True)
class DsoSpec:
    """Real-time oscilloscope.  ``quantizer_bits=None`` disables quantization."""

    sample_rate: float = 240e9
    bandwidth_f3db: float = 100e9
    quantizer_bits: Optional[int] = 8
    record_symbols: Optional[int] = None

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ConfigurationError("DSO sample rate must be > 0")
        if not 0 < self.bandwidth_f3db < self.sample_rate / 2:
            raise ConfigurationError(
                f"DSO bandwidth {self.bandwidth_f3db:g} Hz must lie below half the sample rate"
            )
        if self.quantizer_bits is not None and not 1 <= self.quantizer_bits <= 24:
            raise ConfigurationError("quantizer_bits must be in 1..24 or None")


def photodetect(field: ComplexEnvelope, spec: PhotodiodeSpec, stream: RngStream) -> RealWaveform:
    """Square-law detection with shot and thermal noise, then the PD band limit.

    Both noise terms are white over the simulation band: per-sample variances
    are ``2*q*R*Pmean*fs/2`` (shot, signal-independent approximation) and
    ``density**2 * fs/2`` (thermal).
    """
    fs = field.sample_rate
    current = spec.responsivity * np.abs(field.samples) ** 2
    n = current.size
    if spec.shot_noise_enabled:
        var = 2 * ELECTRON_CHARGE * spec.responsivity * field.mean_power * fs / 2
        if var > 0:
            current = current + np.sqrt(var) * stream.child("shot").generator().standard_normal(n)
    if spec.thermal_current_density > 0:
        sigma = spec.thermal_current_density * np.sqrt(fs / 2)
        current = current + sigma * stream.child("thermal").generator().standard_normal(n)
    return gaussian_lowpass(RealWaveform(current, fs, "ampere"), spec.bandwidth_f3db)


def quantize(samples, bits: int, full_scale: float, center: float = 0.0) -> np.ndarray:
    """Uniform mid-rise quantizer over ``center +- full_scale`` with clipping."""
    if full_scale <= 0:
        return np.asarray(samples, dtype=float).copy()
    step = 2 * full_scale / 2**bits
    x = np.asarray(samples, dtype=float) - center
    q = step * (np.floor(x / step) + 0.5)
    lim = full_scale - step / 2
    return np.clip(q, -lim, lim) + center


def dso_capture(w: RealWaveform, spec: DsoSpec, baud: Optional[float] = None) -> RealWaveform:
    """Scope front-end: band limit, resample to the scope rate, quantize.

    The quantizer full scale follows the scope autoscale convention: centred
    on the record mean with a half-range of four times the AC RMS.
    """
    if w.sample_rate < spec.sample_rate * (1 - 1e-12):
        raise ConfigurationError(
            f"input rate {w.sample_rate:g} Sa/s below DSO rate {spec.sample_rate:g} Sa/s"
        )
    if spec.record_symbols is not None:
        if baud is None:
            raise ConfigurationError("record_symbols check needs the symbol rate")
        available = w.duration * baud
        if available + 1e-6 < spec.record_symbols:
            raise ConfigurationError(
                f"record holds {available:.0f} symbols, {spec.record_symbols} requested"
            )
    out = resample(gaussian_lowpass(w, spec.bandwidth_f3db), spec.sample_rate)
    if spec.quantizer_bits is not None:
        x = out.samples
        center = float(np.mean(x))
        fs_range = 4 * float(np.std(x))
        out = out.with_samples(quantize(x, spec.quantizer_bits, fs_range, center))
    return out
