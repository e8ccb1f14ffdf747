import numpy as np
import pytest

from ooklink.config import LinkConfig
from ooklink.errors import FormatError
from ooklink.pipeline import process_capture, run_single, simulate_link
from ooklink.signal import ComplexEnvelope, RealWaveform
from ooklink.waveio import HEADER, MAGIC, load_waveform, save_waveform


def _real(n=1000, unit="volt"):
    return RealWaveform(np.random.default_rng(0).standard_normal(n), 240e9, unit)


class TestRoundTrip:
    @pytest.mark.parametrize("unit", ["volt", "ampere", "dimensionless"])
    def test_real(self, tmp_path, unit):
        w = _real(unit=unit)
        save_waveform(tmp_path / "w.lwsim", w)
        r = load_waveform(tmp_path / "w.lwsim")
        assert isinstance(r, RealWaveform)
        assert r.sample_rate == w.sample_rate and r.unit == unit
        assert r.samples.tobytes() == w.samples.tobytes()

    def test_complex(self, tmp_path):
        rng = np.random.default_rng(1)
        e = ComplexEnvelope(rng.standard_normal(513) + 1j * rng.standard_normal(513), 1.12e12, 1.5501e-6)
        save_waveform(tmp_path / "e.lwsim", e)
        r = load_waveform(tmp_path / "e.lwsim")
        assert isinstance(r, ComplexEnvelope)
        assert r.wavelength == e.wavelength and r.sample_rate == e.sample_rate
        assert r.samples.tobytes() == e.samples.tobytes()

    def test_layout(self, tmp_path):
        save_waveform(tmp_path / "w.lwsim", _real(10))
        data = (tmp_path / "w.lwsim").read_bytes()
        assert data[:7] == MAGIC
        assert len(data) == HEADER.size + 80 == 33 + 80
        assert int.from_bytes(data[25:33], "little") == 10


class TestErrors:
    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "w.lwsim"
        save_waveform(p, _real(100))
        p.write_bytes(p.read_bytes()[:-5])
        with pytest.raises(FormatError, match="expected 833 bytes, found 828") as info:
            load_waveform(p)
        assert info.value.offset == 828

    def test_truncated_header(self, tmp_path):
        p = tmp_path / "w.lwsim"
        p.write_bytes(MAGIC + b"\0")
        with pytest.raises(FormatError, match="expected 33 bytes, found 8"):
            load_waveform(p)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "w.lwsim"
        save_waveform(p, _real(4))
        p.write_bytes(b"XXSIM1\0" + p.read_bytes()[7:])
        with pytest.raises(FormatError, match="magic") as info:
            load_waveform(p)
        assert info.value.offset == 0

    def test_trailing_bytes(self, tmp_path):
        p = tmp_path / "w.lwsim"
        save_waveform(p, _real(4))
        p.write_bytes(p.read_bytes() + b"\0")
        with pytest.raises(FormatError, match="trailing"):
            load_waveform(p)

    def test_unknown_sample_type(self, tmp_path):
        p = tmp_path / "w.lwsim"
        save_waveform(p, _real(4))
        data = bytearray(p.read_bytes())
        data[7] = 9
        p.write_bytes(bytes(data))
        with pytest.raises(FormatError, match="sample type"):
            load_waveform(p)


def test_offline_processing_matches_in_memory(tmp_path):
    cfg = LinkConfig().with_overrides({"fiber.length_m": 2000, "dsp.equalizers": "none, 6/6"})
    trace = simulate_link(cfg)
    rows = run_single(cfg, trace=trace)
    save_waveform(tmp_path / "cap.lwsim", trace.capture)
    cap = load_waveform(tmp_path / "cap.lwsim")
    d = cfg.dsp
    timing, results = process_capture(
        cap, trace.pattern, cfg.link.baud, d.dfe_configs(), d.guard_symbols, d.min_confidence_db
    )
    assert timing == rows[0].timing
    assert [rec for _, rec, _ in results] == [r.ber for r in rows]
