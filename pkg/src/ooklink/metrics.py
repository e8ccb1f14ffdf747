"""Signal-quality measurements: eye histograms, Q factor, sideband asymmetry, FEC verdict."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dsp import TimingEstimate
from .errors import ConfigurationError, UndefinedMetricError
from .signal import ComplexEnvelope, RealWaveform, resample
from .tx import BitSequence

FEC_THRESHOLD = 5e-3
SIGMA_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class EyeHistogram:
    """2-D counts over (time modulo 2 UI, amplitude).

    ``counts[i, j]`` holds samples in time bin ``i`` and amplitude bin ``j``.
    The recovered eye centres sit at 0.5 and 1.5 UI, i.e. at time columns
    ``n_time/4`` and ``3*n_time/4``.
    """

    counts: np.ndarray
    time_edges: np.ndarray  # in UI, 0..2
    amplitude_edges: np.ndarray
    samples: int

    def __post_init__(self):
        if int(self.counts.sum()) != self.samples:
            raise ConfigurationError("histogram counts do not match the sample count")

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    def center_column(self) -> np.ndarray:
        """Amplitude distribution at the first eye centre (0.5 UI)."""
        return self.counts[self.counts.shape[0] // 4]

    def rebin_amplitude(self, factor: int) -> "EyeHistogram":
        """Merge ``factor`` adjacent amplitude bins; counts are conserved."""
        n_amp = self.counts.shape[1]
        if factor < 1 or n_amp % factor:
            raise ConfigurationError(f"rebin factor {factor} must divide {n_amp}")
        counts = self.counts.reshape(self.counts.shape[0], n_amp // factor, factor).sum(axis=2)
        return EyeHistogram(counts, self.time_edges, self.amplitude_edges[::factor], self.samples)


def eye_histogram(
    w: RealWaveform,
    baud: float,
    phase: TimingEstimate,
    bins: tuple[int, int] = (128, 128),
    amplitude_range: Optional[tuple[float, float]] = None,
) -> EyeHistogram:
    """Fold ``w`` modulo two symbol periods, aligned to the recovered phase.

    Records with fewer samples per UI than time bins per UI are band-limited
    interpolated first, so every time column is filled.  Samples outside
    ``amplitude_range`` (default: the record min/max) are not counted.
    """
    n_time, n_amp = bins
    if n_time < 64 or n_amp < 64:
        raise ConfigurationError("eye histogram needs at least 64x64 bins")
    if w.duration * baud < 1000:
        raise ConfigurationError("eye histogram needs at least 1000 symbols")
    per_ui = n_time // 2
    if w.sample_rate / baud < per_ui:
        w = resample(w, per_ui * baud)
    x = w.samples
    t_ui = np.arange(x.size) * (baud / w.sample_rate) - phase.phase_offset
    t_fold = np.mod(t_ui, 2.0)
    lo, hi = amplitude_range if amplitude_range else (float(x.min()), float(x.max()))
    if hi <= lo:
        hi = lo + 1e-12
    time_edges = np.linspace(0.0, 2.0, n_time + 1)
    amp_edges = np.linspace(lo, hi, n_amp + 1)
    counts, _, _ = np.histogram2d(t_fold, x, bins=(time_edges, amp_edges))
    counts = counts.astype(np.int64)
    return EyeHistogram(counts, time_edges, amp_edges, int(counts.sum()))


def q_factor(symbols, reference: BitSequence) -> float:
    """Q = (mu1 - mu0) / (sigma1 + sigma0) with classes labelled by ``reference``."""
    x = np.asarray(symbols, dtype=float)
    bits = reference.bits[: x.size]
    if bits.size != x.size:
        raise ConfigurationError("reference shorter than the symbol array")
    ones, zeros = x[bits == 1], x[bits == 0]
    if ones.size < 2 or zeros.size < 2:
        raise UndefinedMetricError("Q factor needs both symbol classes", stage="metrics")
    s1 = max(float(np.std(ones)), SIGMA_FLOOR)
    s0 = max(float(np.std(zeros)), SIGMA_FLOOR)
    return (float(np.mean(ones)) - float(np.mean(zeros))) / (s1 + s0)


def sideband_asymmetry(field: ComplexEnvelope, integration_band: float) -> float:
    """10*log10(P_upper / P_lower) over (0, band] and [-band, 0).

    The carrier (DC) bin is excluded, as is the unpaired Nyquist bin of an
    even-length record, so a Hermitian spectrum gives exactly 0 dB.
    """
    fs = field.sample_rate
    if not 0 < integration_band <= fs / 2:
        raise ConfigurationError(f"integration band must lie in (0, fs/2], got {integration_band:g}")
    n = len(field)
    spec = np.abs(np.fft.fft(field.samples)) ** 2
    k = np.fft.fftfreq(n) * n  # integer bin indices
    f = k * fs / n
    paired = np.abs(k) < n / 2
    upper = float(spec[(f > 0) & (f <= integration_band) & paired].sum())
    lower = float(spec[(f < 0) & (f >= -integration_band) & paired].sum())
    if upper == lower:
        return 0.0
    if upper == 0 or lower == 0:
        raise UndefinedMetricError("one sideband carries no power", stage="metrics")
    return 10 * math.log10(upper / lower)


@dataclass(frozen=True)
class FecVerdict:
    ber: float
    threshold: float
    passed: bool
    margin_db: float
    caveat: Optional[str] = None


def fec_verdict(ber: float, threshold: float = FEC_THRESHOLD, bits: Optional[int] = None) -> FecVerdict:
    """Hard-decision FEC check: pass iff ``ber < threshold`` (strict).

    A zero BER reports the rule-of-three upper bound ``3/bits`` (when ``bits``
    is given) as the margin reference and carries a caveat.
    """
    if not 0 <= ber <= 0.5:
        raise ConfigurationError(f"BER must lie in [0, 0.5], got {ber}")
    caveat = None
    if ber == 0:
        bound = 3.0 / bits if bits else 0.0
        caveat = "zero errors counted; BER is an upper bound (rule of three)"
        margin = 10 * math.log10(threshold / bound) if bound > 0 else math.inf
    else:
        margin = 10 * math.log10(threshold / ber)
    return FecVerdict(ber=float(ber), threshold=threshold, passed=ber < threshold, margin_db=margin, caveat=caveat)
