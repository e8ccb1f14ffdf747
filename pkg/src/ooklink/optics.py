"""Optical field path: laser, modulators, fiber, EDFA and attenuator.

Single polarization throughout.  Fields use the engineering convention
``E(t) exp(+j w0 t)``, so a positive phase slope is an up-shift in optical
frequency.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import h as PLANCK

from .errors import ConfigurationError
from .rng import RngStream
from .signal import (
    ComplexEnvelope,
    RealWaveform,
    dbm_to_watts,
    fractional_delay,
)

T_DB_FLOOR = -30.0


@dataclass(frozen=True)
class LaserSpec:
    power_dbm: float = 13.0
    wavelength: float = 1550e-9

    def __post_init__(self):
        if self.power_dbm > 20:
            raise ConfigurationError(f"laser power {self.power_dbm} dBm above 20 dBm")
        if not 1.52e-6 <= self.wavelength <= 1.57e-6:
            raise ConfigurationError(f"laser wavelength {self.wavelength} m outside the C-band")


@dataclass(frozen=True)
class MzmSpec:
    """Dual-drive MZM.

    Arm 2 is driven with ``-arm_ratio`` times the arm-1 drive, delayed by
    ``arm_skew`` seconds.  ``arm_ratio == 1`` with zero skew is chirp-free
    push-pull.
    """

    v_pi: float = 1.095
    bias_phase: float = np.pi / 2
    arm_ratio: float = 1.0
    insertion_loss_db: float = 5.0
    arm_skew: float = 0.0

    def __post_init__(self):
        if not self.v_pi > 0:
            raise ConfigurationError("v_pi must be > 0")
        if self.arm_ratio < 0:
            raise ConfigurationError("arm_ratio must be >= 0")
        if self.insertion_loss_db < 0:
            raise ConfigurationError("insertion loss must be >= 0 dB")


@dataclass(frozen=True)
class EamSpec:
    """Electro-absorption section of the DFB-TWEAM.

    Transmission in dB is linear in the applied voltage below the
    transparency voltage, clamped to [-30, 0] dB.  ``modulated_output_dbm``
    rescales the output to a fixed mean power; ``None`` disables that and
    applies ``insertion_loss_db`` instead.
    """

    extinction_slope: float = 4.5
    transparency_bias: float = -0.3
    alpha_chirp: float = 0.3
    bias_voltage: float = -1.85
    insertion_loss_db: float = 0.0
    modulated_output_dbm: Optional[float] = -1.0

    def __post_init__(self):
        if not self.extinction_slope > 0:
            raise ConfigurationError("extinction slope must be > 0 dB/V")
        if not np.isfinite(self.alpha_chirp):
            raise ConfigurationError("alpha_chirp must be finite")
        if self.insertion_loss_db < 0:
            raise ConfigurationError("insertion loss must be >= 0 dB")


@dataclass(frozen=True)
class FiberSpec:
    """Linear dispersive fiber.  Dispersion is given in ps/(nm km)."""

    length: float = 0.0
    dispersion_ps_nm_km: float = 17.0
    attenuation_db_km: float = 0.2
    wavelength: Optional[float] = None

    def __post_init__(self):
        if self.length < 0:
            raise ConfigurationError("fiber length must be >= 0")
        if self.attenuation_db_km < 0:
            raise ConfigurationError("fiber attenuation must be >= 0")

    @property
    def dispersion(self) -> float:
        """Dispersion parameter D in s/m**2."""
        return self.dispersion_ps_nm_km * 1e-6


@dataclass(frozen=True)
class EdfaSpec:
    gain_db: float = 10.0
    noise_figure_db: float = 5.0

    def __post_init__(self):
        if self.gain_db < 0:
            raise ConfigurationError("EDFA gain must be >= 0 dB")
        if self.noise_figure_db < 3:
            warnings.warn(
                f"EDFA noise figure {self.noise_figure_db} dB is below the 3 dB quantum limit",
                stacklevel=2,
            )


def _check_rates(field: ComplexEnvelope, drive: RealWaveform):
    if len(field) != len(drive) or field.sample_rate != drive.sample_rate:
        raise ConfigurationError(
            f"drive ({len(drive)} samples @ {drive.sample_rate:g} Sa/s) does not match "
            f"field ({len(field)} samples @ {field.sample_rate:g} Sa/s)"
        )


def cw_laser(spec: LaserSpec, n_samples: int, sample_rate: float) -> ComplexEnvelope:
    """Constant field of power ``spec.power_dbm`` and zero phase."""
    if n_samples <= 0:
        raise ConfigurationError("n_samples must be > 0")
    amp = np.sqrt(dbm_to_watts(spec.power_dbm))
    return ComplexEnvelope(np.full(int(n_samples), amp, dtype=complex), sample_rate, spec.wavelength)


def mzm_modulate(field: ComplexEnvelope, drive: RealWaveform, spec: MzmSpec) -> ComplexEnvelope:
    """Two-arm phasor sum.

    E_out = L * E_in/2 * [exp(j*pi*v/Vpi) + exp(-j*pi*r*v(t - skew)/Vpi + j*bias)]
    """
    _check_rates(field, drive)
    loss = 10 ** (-spec.insertion_loss_db / 20)
    v1 = drive.samples
    v2 = fractional_delay(drive, spec.arm_skew).samples if spec.arm_skew else v1
    arms = np.exp(1j * np.pi * v1 / spec.v_pi) + np.exp(
        -1j * np.pi * spec.arm_ratio * v2 / spec.v_pi + 1j * spec.bias_phase
    )
    return field.with_samples(loss * field.samples / 2 * arms)


def eam_transmission_db(voltage, spec: EamSpec):
    t_db = -spec.extinction_slope * (spec.transparency_bias - np.asarray(voltage))
    return np.clip(t_db, T_DB_FLOOR, 0.0)


def eam_modulate(field: ComplexEnvelope, drive: RealWaveform, spec: EamSpec) -> ComplexEnvelope:
    """Chirped electro-absorption modulation.

    The field factor is sqrt(T) * exp(j*alpha/2 * ln T) with T the power
    transmission at ``bias_voltage + drive``.
    """
    _check_rates(field, drive)
    t = 10 ** (eam_transmission_db(spec.bias_voltage + drive.samples, spec) / 10)
    factor = np.sqrt(t) * np.exp(1j * (spec.alpha_chirp / 2) * np.log(t))
    out = field.samples * factor
    if spec.modulated_output_dbm is None:
        out = out * 10 ** (-spec.insertion_loss_db / 20)
    else:
        p = np.mean(np.abs(out) ** 2)
        if p <= 0:
            raise ConfigurationError("EAM output is dark; cannot calibrate output power")
        out = out * np.sqrt(dbm_to_watts(spec.modulated_output_dbm) / p)
    return field.with_samples(out)


def dispersion_response(f, spec: FiberSpec, wavelength: float):
    """All-pass fiber response exp(j*pi*D*lambda^2*L*f^2/c)."""
    lam = spec.wavelength or wavelength
    return np.exp(1j * np.pi * spec.dispersion * lam**2 * spec.length * np.asarray(f) ** 2 / SPEED_OF_LIGHT)


def beta2(spec: FiberSpec, wavelength: float) -> float:
    """Group-velocity dispersion in s**2/m, -D*lambda^2/(2*pi*c)."""
    lam = spec.wavelength or wavelength
    return -spec.dispersion * lam**2 / (2 * np.pi * SPEED_OF_LIGHT)


def fiber_propagate(field: ComplexEnvelope, spec: FiberSpec) -> ComplexEnvelope:
    if spec.length == 0:
        return field
    f = np.fft.fftfreq(len(field), 1 / field.sample_rate)
    out = np.fft.ifft(np.fft.fft(field.samples) * dispersion_response(f, spec, field.wavelength))
    out *= 10 ** (-spec.attenuation_db_km * spec.length / 1e3 / 20)
    return field.with_samples(out)


def ase_psd(spec: EdfaSpec, wavelength: float) -> float:
    """Single-polarization ASE density n_sp*h*nu*(G-1) in W/Hz."""
    gain = 10 ** (spec.gain_db / 10)
    n_sp = 10 ** (spec.noise_figure_db / 10) / 2
    nu = SPEED_OF_LIGHT / wavelength
    return n_sp * PLANCK * nu * (gain - 1)


def edfa_amplify(field: ComplexEnvelope, spec: EdfaSpec, stream: RngStream) -> ComplexEnvelope:
    """Scale by sqrt(G) and add white circular ASE over the simulation band."""
    gain = 10 ** (spec.gain_db / 10)
    out = np.sqrt(gain) * field.samples
    var = ase_psd(spec, field.wavelength) * field.sample_rate
    if var > 0:
        rng = stream.generator()
        n = len(field)
        out = out + np.sqrt(var / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return field.with_samples(out)


def voa(field: ComplexEnvelope, attenuation_db: float) -> ComplexEnvelope:
    if attenuation_db < 0:
        raise ConfigurationError(f"VOA attenuation must be >= 0 dB, got {attenuation_db}")
    if attenuation_db == 0:
        return field
    return field.with_samples(field.samples * 10 ** (-attenuation_db / 20))


def attenuation_for_power(field: ComplexEnvelope, target_dbm: float) -> float:
    """VOA setting that brings the mean power of ``field`` to ``target_dbm``."""
    available = field.mean_power_dbm
    att = available - target_dbm
    if att < 0:
        raise ConfigurationError(
            f"target ROP {target_dbm:.2f} dBm exceeds available power {available:.2f} dBm"
        )
    return float(att)


def set_received_power(field: ComplexEnvelope, target_dbm: float) -> tuple[ComplexEnvelope, float]:
    att = attenuation_for_power(field, target_dbm)
    return voa(field, att), att
