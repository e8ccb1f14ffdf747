import numpy as np
import pytest

from ooklink.rng import RngStream
from ooklink.signal import RealWaveform
from ooklink.tx import BitSequence, SelectorSpec, nrz_synthesize

BAUD = 140e9


def sinusoid(freq, rate, n, amp=1.0, phase=0.0, delay=0.0):
    t = np.arange(n) / rate - delay
    return amp * np.sin(2 * np.pi * freq * t + phase)


def clean_nrz(bits: BitSequence, sps=8, f3db=None, amplitude=0.73) -> RealWaveform:
    """Jitter-free selector waveform with a wide (10x baud) band limit by default."""
    spec = SelectorSpec(output_amplitude=amplitude, jitter_rms=0.0, bandwidth_f3db=f3db or min(10 * BAUD, 0.45 * sps * BAUD))
    return nrz_synthesize(bits, BAUD, sps, spec)


@pytest.fixture
def stream():
    return RngStream(1234, ("test",))


@pytest.fixture(scope="session")
def random_bits():
    rng = np.random.default_rng(7)
    return BitSequence(rng.integers(0, 2, 8192))
