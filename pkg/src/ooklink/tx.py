"""Electrical transmitter: PRBS-15 source, 2:1 ETDM selectors and the driver.

The bit pattern generator emits two 35 Gbaud PRBS-15 streams; SEL1
interleaves them to 70 Gbaud and SEL2 interleaves the 70 Gbaud stream with a
delayed copy of itself to reach 140 Gbaud.  Only the final stage carries
timing jitter and the packaging low-pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .errors import ConfigurationError
from .rng import RngStream
from .signal import RealWaveform, gaussian_lowpass

PRBS15_PERIOD = 2**15 - 1


@dataclass(frozen=True, eq=False)
class BitSequence:
    """Ordered binary symbols; ``tag`` records where they came from."""

    bits: np.ndarray
    tag: Literal["prbs15", "explicit"] = "explicit"

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8, copy=True).ravel()
        if bits.size == 0:
            raise ConfigurationError("bit sequence must be non-empty")
        if np.any(bits > 1):
            raise ConfigurationError("bit sequence must contain only 0 and 1")
        if self.tag not in ("prbs15", "explicit"):
            raise ConfigurationError(f"unknown generator tag {self.tag!r}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __len__(self):
        return self.bits.size

    def __eq__(self, other):
        return isinstance(other, BitSequence) and np.array_equal(self.bits, other.bits)

    def shifted(self, k: int) -> "BitSequence":
        """Cyclic advance: ``out[n] = bits[(n + k) % N]``."""
        return BitSequence(np.roll(self.bits, -int(k)), self.tag)

    def tiled(self, periods: int) -> "BitSequence":
        return BitSequence(np.tile(self.bits, periods), self.tag)

    def inverted(self) -> "BitSequence":
        return BitSequence(1 - self.bits, "explicit")

    def bipolar(self) -> np.ndarray:
        """Bits mapped to +-1 (1 -> +1)."""
        return 2.0 * self.bits - 1.0


@lru_cache(maxsize=32)
def _prbs15_bits(register_seed: int) -> np.ndarray:
    # Fibonacci LFSR for x^15 + x^14 + 1: s[n] = s[n-14] ^ s[n-15]
    out = np.empty(PRBS15_PERIOD, dtype=np.uint8)
    state = [(register_seed >> i) & 1 for i in range(15)]
    out[:15] = state
    for n in range(15, PRBS15_PERIOD):
        out[n] = out[n - 14] ^ out[n - 15]
    out.setflags(write=False)
    return out


def prbs15(register_seed: int = 0x7FFF) -> BitSequence:
    """One full period (32767 bits) of the x^15 + x^14 + 1 m-sequence.

    The first 15 output bits are the register seed, least significant bit
    first.
    """
    if not 0 < register_seed < 2**15:
        raise ConfigurationError(
            f"PRBS-15 register seed must be a nonzero 15-bit value, got {register_seed}"
        )
    return BitSequence(_prbs15_bits(int(register_seed)), "prbs15")


def etdm_mux(a: BitSequence, b: BitSequence) -> BitSequence:
    """2:1 selector: strict interleave a0, b0, a1, b1, ..."""
    if len(a) != len(b):
        raise ConfigurationError(f"selector inputs differ in length ({len(a)} vs {len(b)})")
    out = np.empty(2 * len(a), dtype=np.uint8)
    out[0::2] = a.bits
    out[1::2] = b.bits
    return BitSequence(out, "explicit")


def etdm_demux(c: BitSequence) -> tuple[BitSequence, BitSequence]:
    if len(c) % 2:
        raise ConfigurationError("cannot de-interleave an odd-length sequence")
    return BitSequence(c.bits[0::2]), BitSequence(c.bits[1::2])


def etdm_pattern(register_seed: int = 0x7FFF, bpg_delay: int = 16384, sel2_delay: int = 8191) -> BitSequence:
    """One period of the 140 Gbaud pattern produced by the BPG + SEL1 + SEL2 cascade.

    ``bpg_delay`` is the offset between the two 35 Gbaud BPG channels and
    ``sel2_delay`` the offset of SEL2's second (delayed 70 Gbaud) input, both
    in bits of the respective input stream.  The default BPG offset of 16384
    makes the SEL1 output itself a PRBS-15 (decimation property of
    m-sequences).
    """
    ch = prbs15(register_seed)
    sel1 = etdm_mux(ch, ch.shifted(bpg_delay))
    sel2 = etdm_mux(sel1, sel1.shifted(sel2_delay))
    return BitSequence(_minimal_period(sel2.bits), "explicit")


def _minimal_period(bits: np.ndarray) -> np.ndarray:
    n = bits.size
    for d in range(1, n + 1):
        if n % d == 0 and np.array_equal(bits, np.roll(bits, d)):
            return bits[:d]
    return bits


@dataclass(frozen=True)
class SelectorSpec:
    """Final 2:1 selector output stage.

    ``output_amplitude`` is the differential peak-to-peak swing in volts; each
    rail swings half of it.
    """

    output_amplitude: float = 0.73
    jitter_rms: float = 150e-15
    bandwidth_f3db: float = 60e9

    def __post_init__(self):
        if not 0.25 <= self.output_amplitude <= 0.73:
            raise ConfigurationError(
                f"selector amplitude {self.output_amplitude} V outside the 0.25-0.73 V device range"
            )
        if self.jitter_rms < 0:
            raise ConfigurationError("jitter_rms must be >= 0")
        if not self.bandwidth_f3db > 0:
            raise ConfigurationError("selector bandwidth must be > 0")


@dataclass(frozen=True)
class DriverSpec:
    gain_db: float = 16.0
    bandwidth_f3db: float = 110e9
    saturation_level: float = 1.5

    def __post_init__(self):
        if not np.isfinite(self.gain_db):
            raise ConfigurationError("driver gain must be finite")
        if not self.bandwidth_f3db > 0:
            raise ConfigurationError("driver bandwidth must be > 0")
        if not self.saturation_level > 0:
            raise ConfigurationError("driver saturation level must be > 0")


def nrz_synthesize(
    bits: BitSequence,
    baud: float,
    sps: int,
    spec: SelectorSpec,
    stream: RngStream | None = None,
) -> RealWaveform:
    """Positive rail of the differential NRZ selector output.

    Bits map to +-amplitude/4 (the rail swings amplitude/2 peak-to-peak, the
    negative rail is the negation).  Every symbol boundary k*T is moved by an
    independent N(0, jitter_rms) offset; the moved edge is placed on the
    oversampled grid by area, so each sample holds the mean of the ideal
    waveform over its own sample interval.  The result is low-passed at
    ``spec.bandwidth_f3db``.

    The record is periodic: the boundary at t=0 separates the last and first
    symbols.
    """
    if int(sps) != sps or sps < 4:
        raise ConfigurationError(f"samples per symbol must be an integer >= 4, got {sps}")
    if not baud > 0:
        raise ConfigurationError("baud must be > 0")
    if spec.jitter_rms > 0.25 / baud:
        raise ConfigurationError(
            f"jitter {spec.jitter_rms:g} s exceeds 0.25 UI ({0.25 / baud:g} s); edge model invalid"
        )
    sps = int(sps)
    nsym = len(bits)
    n = nsym * sps
    levels = (spec.output_amplitude / 4) * bits.bipolar()
    step = levels - np.roll(levels, 1)  # step at boundary k, entering symbol k

    pos = np.arange(nsym, dtype=float) * sps
    if spec.jitter_rms > 0:
        if stream is None:
            raise ConfigurationError("jitter requires an RNG stream")
        pos = pos + stream.generator().standard_normal(nsym) * (spec.jitter_rms * baud * sps)

    # a step at position p fills sample i (interval [i-1/2, i+1/2)) by clip(i + 1/2 - p, 0, 1)
    j = np.floor(pos + 0.5).astype(np.int64)
    frac = j + 0.5 - pos
    inc = np.zeros(n)
    np.add.at(inc, j % n, step * frac)
    np.add.at(inc, (j + 1) % n, step * (1 - frac))
    wave = np.cumsum(inc)
    # the sample intervals tile one period exactly, so the sample sum must equal
    # the integral of the jittered waveform; that pins the free constant
    dwell = np.diff(np.append(pos, pos[0] + n))
    wave += (np.dot(levels, dwell) - wave.sum()) / n
    out = RealWaveform(wave, baud * sps, "volt")
    return gaussian_lowpass(out, spec.bandwidth_f3db)


def driver_amplify(w: RealWaveform, spec: DriverSpec) -> RealWaveform:
    """Linear gain, Gaussian band limit, then a tanh soft limiter."""
    gain = 10 ** (spec.gain_db / 20)
    amplified = gaussian_lowpass(w.with_samples(w.samples * gain), spec.bandwidth_f3db)
    sat = spec.saturation_level
    return amplified.with_samples(sat * np.tanh(amplified.samples / sat))
