"""Offline receiver DSP: clock recovery, resampling, LMS DFE, error counting.

Timing convention: a ``TimingEstimate`` with ``phase_offset = tau`` means the
eye centres of the captured waveform sit at ``(k + 1/2 + tau) * T``.  An
undelayed waveform from ``nrz_synthesize`` therefore reads ``tau = 0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal, Optional

import numba
import numpy as np
from scipy import stats

from .errors import ConfigurationError, DivergenceError, TimingFailure
from .signal import RealWaveform, fractional_delay, resample
from .tx import BitSequence

MIN_CLOCK_SYMBOLS = 4096
SYNC_THRESHOLD = 0.2


@dataclass(frozen=True)
class TimingEstimate:
    phase_offset: float
    confidence: float  # dB, tone magnitude over RMS of neighbouring bins

    def __post_init__(self):
        if not (math.isfinite(self.phase_offset) and math.isfinite(self.confidence)):
            raise TimingFailure("non-finite timing estimate", stage="clock-recovery")


def _dft_bin(y: np.ndarray, freq: float, fs: float) -> complex:
    n = np.arange(y.size)
    return complex(np.dot(y, np.exp(-2j * np.pi * (freq / fs) * n)))


def clock_recover(
    w: RealWaveform,
    baud: float,
    min_confidence_db: float = 6.0,
    neighbours: int = 16,
    resolve_half_ui: bool = True,
) -> TimingEstimate:
    """Square-law timing estimate from the symbol-rate spectral line.

    The AC part of the waveform is squared and projected onto a single DFT
    bin at ``baud``.  Transitions show up as periodic dips in ``x**2``, so the
    line phase is ``pi - 2*pi*tau``.  Confidence compares the line to the
    RMS of the ``neighbours`` bins on either side.  With ``resolve_half_ui``
    the half-symbol ambiguity of the line is settled blindly from the symbol
    statistics.
    """
    fs = w.sample_rate
    nsym = w.duration * baud
    if nsym < MIN_CLOCK_SYMBOLS:
        raise ConfigurationError(
            f"clock recovery needs >= {MIN_CLOCK_SYMBOLS} symbols, record spans {nsym:.0f}"
        )
    if fs <= baud:
        raise ConfigurationError(f"sample rate {fs:g} must exceed the symbol rate {baud:g}")
    x = w.samples - np.mean(w.samples)
    y = x * x
    y = y - np.mean(y)
    tone = _dft_bin(y, baud, fs)
    df = 1.0 / w.duration
    side = [abs(_dft_bin(y, baud + m * df, fs)) for m in range(-neighbours, neighbours + 1) if m]
    floor = math.sqrt(np.mean(np.square(side)))
    mag = abs(tone)
    if mag == 0:
        confidence = -math.inf
    elif floor == 0:
        confidence = math.inf
    else:
        confidence = 20 * math.log10(mag / floor)
    if not confidence >= min_confidence_db:
        raise TimingFailure(
            f"symbol-rate tone {confidence:.1f} dB above neighbours (< {min_confidence_db} dB)",
            stage="clock-recovery",
        )
    tau = (math.pi - np.angle(tone)) / (2 * math.pi)
    tau = (tau + 0.5) % 1.0 - 0.5
    if resolve_half_ui:
        tau = _resolve_half_ui(w, baud, tau)
    return TimingEstimate(float(tau), float(min(confidence, 999.0)))


def _kurtosis_at(w: RealWaveform, baud: float, tau: float) -> float:
    x = resample_to_symbols(w, baud, TimingEstimate(tau, 0.0), guard_symbols=0)
    x = x - np.mean(x)
    p2 = np.mean(x * x)
    return float(np.mean(x**4) / p2**2) if p2 > 0 else math.inf


def _resolve_half_ui(w: RealWaveform, baud: float, tau: float) -> float:
    """Pick between ``tau`` and ``tau + 0.5``: the eye centre has the lower kurtosis.

    Dispersion can invert the clock line, which moves its peak onto the
    crossings.  Binary eye-centre samples are closer to two-level (kurtosis
    near 1) than crossing samples.  Records that do not span a whole number
    of symbols are returned unchanged.
    """
    nsym = w.duration * baud
    if abs(nsym - round(nsym)) > 1e-6:
        return tau
    alt = (tau + 1.0) % 1.0 - 0.5
    return alt if _kurtosis_at(w, baud, alt) < _kurtosis_at(w, baud, tau) else tau


def resample_to_symbols(
    w: RealWaveform,
    baud: float,
    estimate: TimingEstimate,
    guard_symbols: int = 256,
) -> np.ndarray:
    """One sample per symbol at the recovered eye centres.

    The waveform is advanced by the estimated phase, interpolated (FFT,
    band-limited) to an even multiple of the baud rate at or above the input
    rate, and decimated at the symbol centres.  ``guard_symbols`` are dropped
    from each end, so the output holds ``N - 2*guard_symbols`` samples.
    """
    nsym_f = w.duration * baud
    nsym = int(round(nsym_f))
    if abs(nsym_f - nsym) > 1e-6:
        raise ConfigurationError(f"record must span a whole number of symbols, got {nsym_f:.6f}")
    if nsym <= 2 * guard_symbols:
        raise ConfigurationError("record shorter than the edge guards")
    m = 2 * math.ceil(w.sample_rate / (2 * baud))
    shifted = fractional_delay(w, -estimate.phase_offset / baud)
    fine = resample(shifted, m * baud)
    sym = fine.samples[m // 2 :: m][:nsym]
    return np.array(sym[guard_symbols : nsym - guard_symbols])


def circular_correlation(x: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """c[k] = sum_n x[n] * reference[(n + k) % P], x folded onto the reference period."""
    period = reference.size
    folded = np.bincount(np.arange(x.size) % period, weights=x, minlength=period)
    return np.fft.irfft(np.conj(np.fft.rfft(folded)) * np.fft.rfft(reference), period)


def align_reference(x: np.ndarray, pattern: BitSequence) -> tuple[int, int, float]:
    """Soft alignment of symbol samples to the periodic reference.

    Returns ``(shift, polarity, normalized_correlation)`` such that sample
    ``x[n]`` carries bit ``pattern[(n + shift) % P]``; ``polarity`` is -1 when
    the signal is inverted.
    """
    xc = np.asarray(x, dtype=float)
    xc = xc - xc.mean()
    c = circular_correlation(xc, pattern.bipolar())
    k = int(np.argmax(np.abs(c)))
    norm = np.sqrt(np.sum(xc**2) * xc.size) or 1.0
    return k, (1 if c[k] >= 0 else -1), float(abs(c[k]) / norm)


@dataclass(frozen=True)
class DfeConfig:
    """Symbol-spaced LMS decision-feedback equalizer.

    ``cursor_delay`` is the number of feed-forward taps ahead of the cursor
    (``None``: ``n_ff // 2``).  ``frozen`` keeps the initial taps (a plain
    slicer for ``n_ff=1, n_fb=0``) and skips training.
    """

    n_ff: int
    n_fb: int = 0
    step_mu: float = 1e-3
    train_symbols: int = 32768
    passes: int = 3
    frozen: bool = False
    cursor_delay: Optional[int] = None
    window: int = 1024

    def __post_init__(self):
        if self.n_ff < 1:
            raise ConfigurationError("n_ff must be >= 1")
        if self.n_fb < 0:
            raise ConfigurationError("n_fb must be >= 0")
        if not 0 < self.step_mu < 1:
            raise ConfigurationError("step_mu must lie in (0, 1)")
        if not self.frozen and self.train_symbols < 10 * (self.n_ff + self.n_fb):
            raise ConfigurationError("train_symbols must be >= 10*(n_ff + n_fb)")
        if self.passes < 0:
            raise ConfigurationError("passes must be >= 0")
        if self.cursor_delay is not None and not 0 <= self.cursor_delay < self.n_ff:
            raise ConfigurationError("cursor_delay must index a feed-forward tap")
        if self.window < 1:
            raise ConfigurationError("window must be >= 1")

    @property
    def delay(self) -> int:
        return self.n_ff // 2 if self.cursor_delay is None else self.cursor_delay

    @property
    def label(self) -> str:
        if self.frozen and self.n_ff == 1 and self.n_fb == 0:
            return "none"
        return f"{self.n_ff}/{self.n_fb}" + ("f" if self.frozen else "")

    @classmethod
    def parse(cls, text: str, **defaults) -> "DfeConfig":
        """``none`` -> frozen slicer; ``nff/nfb`` or ``nff,nfb`` (``f`` suffix freezes)."""
        t = text.strip().lower()
        if t in ("none", "slicer"):
            return cls(n_ff=1, n_fb=0, frozen=True, **defaults)
        frozen = t.endswith("f")
        t = t.rstrip("f")
        sep = "/" if "/" in t else ","
        try:
            nff, nfb = (int(p) for p in t.split(sep))
        except ValueError as exc:
            raise ConfigurationError(f"cannot parse equalizer {text!r}; use e.g. 12/6") from exc
        return cls(n_ff=nff, n_fb=nfb, frozen=frozen, **defaults)


@dataclass(frozen=True, eq=False)
class DfeResult:
    decisions: BitSequence
    soft: np.ndarray
    ff_taps: np.ndarray
    fb_taps: np.ndarray
    mse_trace: np.ndarray
    threshold: float
    discarded: int
    delay: int


@numba.njit(cache=True)
def _dfe_kernel(x, targets, w, b, mu, delay, train_len, passes, adapt, window):
    n_ff = w.size
    n_fb = b.size
    N = x.size
    n_out = N - delay
    n_train = min(train_len, n_out)
    n_win = (passes * n_train + n_out) // window + 2
    mse = np.empty(n_win)
    nw = 0
    acc = 0.0
    cnt = 0
    past = np.zeros(max(n_fb, 1))
    tsum = 0.0
    tcnt = 0

    for _ in range(passes):
        past[:] = 0.0
        for n in range(n_train):
            y = 0.0
            for k in range(n_ff):
                i = n + delay - k
                if i >= 0:
                    y += w[k] * x[i]
            for m in range(n_fb):
                y -= b[m] * past[m]
            t = targets[n]
            e = t - y
            tsum += t
            tcnt += 1
            if adapt:
                for k in range(n_ff):
                    i = n + delay - k
                    if i >= 0:
                        w[k] += mu * e * x[i]
                for m in range(n_fb):
                    b[m] -= mu * e * past[m]
            for m in range(n_fb - 1, 0, -1):
                past[m] = past[m - 1]
            if n_fb > 0:
                past[0] = t
            acc += e * e
            cnt += 1
            if cnt == window:
                mse[nw] = acc / cnt
                nw += 1
                acc = 0.0
                cnt = 0

    thr = tsum / tcnt if tcnt > 0 else 0.0
    soft = np.empty(n_out)
    dec = np.empty(n_out)
    past[:] = 0.0
    for n in range(n_out):
        y = 0.0
        for k in range(n_ff):
            i = n + delay - k
            if i >= 0:
                y += w[k] * x[i]
        for m in range(n_fb):
            y -= b[m] * past[m]
        d = 1.0 if y >= thr else -1.0
        e = d - y
        if adapt:
            for k in range(n_ff):
                i = n + delay - k
                if i >= 0:
                    w[k] += mu * e * x[i]
            for m in range(n_fb):
                b[m] -= mu * e * past[m]
        for m in range(n_fb - 1, 0, -1):
            past[m] = past[m - 1]
        if n_fb > 0:
            past[0] = d
        soft[n] = y
        dec[n] = d
        acc += e * e
        cnt += 1
        if cnt == window:
            mse[nw] = acc / cnt
            nw += 1
            acc = 0.0
            cnt = 0
    return soft, dec, mse[:nw], thr


def _diverged(trace: np.ndarray, growth: float = 2.0, run: int = 3) -> bool:
    if not np.all(np.isfinite(trace)):
        return True
    streak = 0
    for prev, cur in zip(trace[:-1], trace[1:]):
        streak = streak + 1 if cur > growth * prev else 0
        if streak >= run:
            return True
    return False


def dfe_equalize(x, cfg: DfeConfig, reference: BitSequence) -> DfeResult:
    """Equalize symbol-spaced samples ``x``.

    ``reference[n]`` must be the transmitted bit carried by ``x[n]`` (already
    aligned and polarity-matched); it supplies the +-1 training targets.  The
    output for symbol n is

        y[n] = sum_k w[k] x[n + D - k] - sum_m b[m] d[n - m]

    with D the cursor delay, so ``x[n + D]`` is the newest sample used.  The
    last D symbols have no complete input window and are not decided; the
    first ``n_ff + n_fb`` decisions are discarded.

    Raises
    ------
    DivergenceError
        If the windowed MSE is non-finite or grows by more than 2x over three
        consecutive windows.
    """
    x = np.ascontiguousarray(x, dtype=float)
    delay = cfg.delay
    n_out = x.size - delay
    if n_out <= cfg.n_ff + cfg.n_fb:
        raise ConfigurationError("too few symbols for the equalizer")
    if len(reference) < n_out:
        raise ConfigurationError("reference shorter than the equalized span")
    targets = reference.bipolar()[:n_out].astype(float)
    w = np.zeros(cfg.n_ff)
    w[delay] = 1.0
    b = np.zeros(cfg.n_fb)
    adapt = not cfg.frozen
    passes = 0 if cfg.frozen else cfg.passes
    soft, dec, trace, thr = _dfe_kernel(
        x, targets, w, b, cfg.step_mu, delay, cfg.train_symbols, passes, adapt, cfg.window
    )
    if _diverged(trace) or not np.all(np.isfinite(soft)):
        raise DivergenceError(
            f"LMS diverged for {cfg.label} at mu={cfg.step_mu:g}; try a smaller step",
            stage="equalizer",
        )
    discard = cfg.n_ff + cfg.n_fb
    bits = (dec[discard:] > 0).astype(np.uint8)
    return DfeResult(
        decisions=BitSequence(bits),
        soft=soft[discard:],
        ff_taps=w,
        fb_taps=b,
        mse_trace=trace,
        threshold=float(thr),
        discarded=discard,
        delay=delay,
    )


@dataclass(frozen=True)
class BerRecord:
    errors: int
    bits: int
    ber: float
    alignment_offset: int
    polarity: Literal["normal", "inverted"]
    confidence_interval: tuple[float, float]
    sync_failed: bool = False
    correlation: float = 1.0
    equalizer: Optional[str] = None
    flags: tuple[str, ...] = field(default=())

    @property
    def reliable(self) -> bool:
        """At least 10 counted errors (or a clean, synchronized zero-error run)."""
        return self.errors >= 10

    @property
    def reportable(self) -> bool:
        return self.bits >= 100_000 and not self.sync_failed


def binomial_interval(errors: int, bits: int, level: float = 0.95) -> tuple[float, float]:
    """Exact (Clopper-Pearson) interval; rule-of-three upper bound at zero errors."""
    if bits <= 0:
        return (0.0, 1.0)
    if errors == 0:
        return (0.0, min(1.0, 3.0 / bits))
    a = (1 - level) / 2
    low = float(stats.beta.ppf(a, errors, bits - errors + 1))
    high = 1.0 if errors == bits else float(stats.beta.ppf(1 - a, errors + 1, bits - errors))
    return (low, high)


def count_errors(decided: BitSequence, prbs_reference: BitSequence, guard: int = 0) -> BerRecord:
    """Count bit errors against the best cyclic alignment of the reference period.

    Every cyclic shift of the reference and both polarities are scored by
    normalized correlation (via FFT).  Below a correlation of 0.2 the record
    is flagged ``sync_failed`` and reported at BER 0.5.  ``guard`` bits are
    ignored at each end of ``decided``.
    """
    d = decided.bits
    if guard:
        d = d[guard : d.size - guard]
    m = d.size
    if m == 0:
        raise ConfigurationError("no decided bits to count")
    if m < 100_000:
        warnings.warn(f"only {m} bits counted; BER point is not reportable", stacklevel=2)
    ref = prbs_reference.bipolar()
    c = circular_correlation(2.0 * d - 1.0, ref)
    k = int(np.argmax(np.abs(c)))
    corr = float(abs(c[k]) / m)
    polarity = "normal" if c[k] >= 0 else "inverted"
    if corr < SYNC_THRESHOLD:
        errors = m // 2
        return BerRecord(
            errors=errors,
            bits=m,
            ber=errors / m,
            alignment_offset=k,
            polarity=polarity,
            confidence_interval=binomial_interval(errors, m),
            sync_failed=True,
            correlation=corr,
            flags=("sync_failure",),
        )
    expected = prbs_reference.bits[(np.arange(m) + k) % ref.size]
    if polarity == "inverted":
        expected = 1 - expected
    errors = int(np.count_nonzero(expected != d))
    return BerRecord(
        errors=errors,
        bits=m,
        ber=errors / m,
        alignment_offset=k,
        polarity=polarity,
        confidence_interval=binomial_interval(errors, m),
        correlation=corr,
    )
