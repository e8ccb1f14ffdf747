"""Waveform-level simulator and receiver DSP for 140 Gbaud OOK IM/DD links."""

from .config import LinkConfig, load_config, parse_config
from .dsp import (
    BerRecord,
    DfeConfig,
    DfeResult,
    TimingEstimate,
    clock_recover,
    count_errors,
    dfe_equalize,
    resample_to_symbols,
)
from .errors import (
    ConfigurationError,
    DivergenceError,
    FormatError,
    LinkSimError,
    TimingFailure,
    UndefinedMetricError,
)
from .metrics import EyeHistogram, FecVerdict, eye_histogram, fec_verdict, q_factor, sideband_asymmetry
from .optics import (
    EamSpec,
    EdfaSpec,
    FiberSpec,
    LaserSpec,
    MzmSpec,
    cw_laser,
    eam_modulate,
    edfa_amplify,
    fiber_propagate,
    mzm_modulate,
    voa,
)
from .pipeline import SweepSpec, run_single, run_sweep, simulate_link
from .rng import RngStream, derive_seed
from .rx import DsoSpec, PhotodiodeSpec, dso_capture, photodetect
from .signal import (
    ComplexEnvelope,
    RealWaveform,
    Spectrum,
    add_awgn,
    fractional_delay,
    gaussian_lowpass,
    psd,
    resample,
)
from .tx import BitSequence, DriverSpec, SelectorSpec, driver_amplify, etdm_mux, nrz_synthesize, prbs15
from .waveio import load_waveform, save_waveform

__version__ = "0.1.0"
