"""Uniform-grid waveform containers and the numeric primitives built on them.

All filtering is circular (FFT based).  Records are whole periods of a
periodic drive pattern, so wrap-around is the physical answer rather than an
artifact; measurements still drop edge guards downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal, TypeVar, Union

import numpy as np
import scipy.signal

from .errors import ConfigurationError
from .rng import RngStream

Unit = Literal["volt", "ampere", "dimensionless"]
UNITS = ("volt", "ampere", "dimensionless")


def _frozen_array(x, dtype) -> np.ndarray:
    arr = np.array(x, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RealWaveform:
    """Real electrical signal (volts, amperes or dimensionless) on a uniform grid."""

    samples: np.ndarray
    sample_rate: float
    unit: Unit = "volt"

    def __post_init__(self):
        samples = _frozen_array(self.samples, np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ConfigurationError("waveform samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ConfigurationError("waveform samples must be finite")
        if not self.sample_rate > 0:
            raise ConfigurationError(f"sample_rate must be > 0, got {self.sample_rate}")
        if self.unit not in UNITS:
            raise ConfigurationError(f"unknown unit tag {self.unit!r}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def with_samples(self, samples) -> "RealWaveform":
        return replace(self, samples=samples)


@dataclass(frozen=True, eq=False)
class ComplexEnvelope:
    """Optical field envelope in sqrt(W); ``|E|**2`` is instantaneous power."""

    samples: np.ndarray
    sample_rate: float
    wavelength: float = 1550e-9

    def __post_init__(self):
        samples = _frozen_array(self.samples, np.complex128)
        if samples.ndim != 1 or samples.size == 0:
            raise ConfigurationError("field samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ConfigurationError("field samples must be finite")
        if not self.sample_rate > 0:
            raise ConfigurationError(f"sample_rate must be > 0, got {self.sample_rate}")
        if not self.wavelength > 0:
            raise ConfigurationError(f"wavelength must be > 0, got {self.wavelength}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))
        object.__setattr__(self, "wavelength", float(self.wavelength))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @property
    def mean_power(self) -> float:
        """Average optical power in watts."""
        return float(np.mean(self.power))

    @property
    def mean_power_dbm(self) -> float:
        return watts_to_dbm(self.mean_power)

    def with_samples(self, samples) -> "ComplexEnvelope":
        return replace(self, samples=samples)


Waveform = Union[RealWaveform, ComplexEnvelope]
W = TypeVar("W", RealWaveform, ComplexEnvelope)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Two-sided power spectral density on fftshift-ordered frequency bins.

    ``psd`` is linear (W/Hz for optical fields, unit**2/Hz for electrical
    signals); ``frequencies`` are offsets from the carrier in Hz.
    """

    frequencies: np.ndarray
    psd: np.ndarray
    resolution_bw: float
    unit: str = "W/Hz"
    segments: int = 1

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def total_power(self) -> float:
        return float(np.sum(self.psd) * self.bin_width)

    def psd_dbm_per_hz(self) -> np.ndarray:
        """Optical PSD in dBm/Hz (floor at 1e-30 W/Hz)."""
        return 10 * np.log10(np.maximum(self.psd, 1e-30) / 1e-3)

    def psd_db(self) -> np.ndarray:
        return 10 * np.log10(np.maximum(self.psd, 1e-300))


def dbm_to_watts(p_dbm: float) -> float:
    return 10 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w: float) -> float:
    return 10 * np.log10(p_w) + 30.0 if p_w > 0 else -np.inf


def _is_real(w: Waveform) -> bool:
    return isinstance(w, RealWaveform)


def _apply_response(w: W, response) -> W:
    """Multiply the spectrum of ``w`` by ``response(f)`` (f in Hz, numpy order)."""
    n = len(w)
    fs = w.sample_rate
    if _is_real(w):
        f = np.fft.rfftfreq(n, 1 / fs)
        out = np.fft.irfft(np.fft.rfft(w.samples) * response(f), n)
    else:
        f = np.fft.fftfreq(n, 1 / fs)
        out = np.fft.ifft(np.fft.fft(w.samples) * response(f))
    return w.with_samples(out)


def gaussian_response(f, f3db: float):
    """Zero-phase Gaussian magnitude response, |H(f3db)|**2 = 1/2."""
    return np.exp(-(np.log(2) / 2) * (np.asarray(f) / f3db) ** 2)


def gaussian_lowpass(w: W, f3db: float) -> W:
    """Gaussian low-pass used for every band-limited element of the link.

    Parameters
    ----------
    w : RealWaveform or ComplexEnvelope
    f3db : float
        3 dB (half-power) bandwidth in Hz, strictly inside (0, fs/2).
    """
    if not 0 < f3db < w.sample_rate / 2:
        raise ConfigurationError(
            f"f3dB={f3db:g} Hz outside (0, fs/2={w.sample_rate / 2:g} Hz)"
        )
    return _apply_response(w, lambda f: gaussian_response(f, f3db))


def resample(w: W, new_rate: float) -> W:
    """Band-limited (FFT zero-pad / truncate) change of sample rate.

    The record duration is preserved, so the new length is
    ``round(n * new_rate / old_rate)``; when that ratio is not an integer the
    returned ``sample_rate`` is the exact rate implied by the rounded length.
    """
    if not new_rate > 0:
        raise ConfigurationError(f"new_rate must be > 0, got {new_rate}")
    if new_rate == w.sample_rate:
        return w
    n = len(w)
    n_new = int(round(n * new_rate / w.sample_rate))
    if n_new < 1:
        raise ConfigurationError("resampled record would be empty")
    rate = n_new / w.duration
    if abs(rate - new_rate) <= 1e-9 * new_rate:
        rate = float(new_rate)
    out = scipy.signal.resample(w.samples, n_new)
    return replace(w, samples=out, sample_rate=rate)


def fractional_delay(w: W, tau: float) -> W:
    """Delay by ``tau`` seconds with a frequency-domain phase ramp (circular)."""
    if abs(tau) >= w.duration / 4:
        raise ConfigurationError(
            f"|tau|={abs(tau):g} s must be below a quarter of the record ({w.duration / 4:g} s)"
        )
    if tau == 0:
        return w
    return _apply_response(w, lambda f: np.exp(-2j * np.pi * f * tau))


def psd(w: Waveform, resolution_bw: float) -> Spectrum:
    """Two-sided averaged periodogram over non-overlapping rectangular segments.

    The segment length is the record split into ``floor(n * rbw / fs)``
    equal pieces, so the summed PSD equals the mean power of the analysed
    samples exactly (Parseval).  Trailing samples that do not fill a segment
    are dropped.
    """
    n = len(w)
    fs = w.sample_rate
    if not resolution_bw > 0 or resolution_bw < fs / n * (1 - 1e-12):
        raise ConfigurationError(
            f"resolution bandwidth {resolution_bw:g} Hz finer than fs/length = {fs / n:g} Hz"
        )
    k = max(1, int(np.floor(n * resolution_bw / fs + 1e-9)))
    nseg = n // k
    # Bartlett estimate: rectangular window, no overlap, no detrending
    freqs, dens = scipy.signal.welch(
        np.asarray(w.samples[: k * nseg]),
        fs=fs,
        window="boxcar",
        nperseg=nseg,
        noverlap=0,
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    freqs, dens = np.fft.fftshift(freqs), np.fft.fftshift(dens)
    if _is_real(w):
        unit = {"volt": "V2/Hz", "ampere": "A2/Hz"}.get(w.unit, "1/Hz")
    else:
        unit = "W/Hz"
    return Spectrum(freqs, dens, resolution_bw=fs / nseg, unit=unit, segments=k)


def add_awgn(w: W, sigma: float, stream: RngStream) -> W:
    """Add white Gaussian noise of standard deviation ``sigma``.

    Complex envelopes receive circularly symmetric noise whose total variance
    is ``sigma**2`` (half per quadrature).
    """
    if sigma < 0:
        raise ConfigurationError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return w
    rng = stream.generator()
    n = len(w)
    if _is_real(w):
        noise = sigma * rng.standard_normal(n)
    else:
        noise = (sigma / np.sqrt(2)) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return w.with_samples(w.samples + noise)
