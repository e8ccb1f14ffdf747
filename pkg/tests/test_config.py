import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ooklink.config import LinkConfig, demo_config_path, load_config, parse_config
from ooklink.errors import ConfigurationError

DEMOS = ["mzm_5500m", "mzm_edfa", "tweam_edfa", "tweam_b2b"]


class TestParse:
    def test_defaults(self):
        cfg = parse_config("")
        assert cfg == LinkConfig()
        assert cfg.link.baud == 140e9 and cfg.link.samples_per_symbol == 8

    def test_comments_and_whitespace(self):
        cfg = parse_config("# header\n\n  fiber.length_m = 5500   # metres\nedfa.enabled = yes\n")
        assert cfg.fiber.length == 5500.0
        assert cfg.edfa.enabled is True

    def test_ps_nm_km_dispersion(self):
        cfg = parse_config("fiber.dispersion_ps_nm_km = 17")
        assert cfg.fiber.dispersion_ps_nm_km == 17.0

    def test_optional_none(self):
        cfg = parse_config("voa.rop_dbm = -3\n")
        assert cfg.voa.rop_dbm == -3.0
        assert parse_config("voa.rop_dbm = none").voa.rop_dbm is None

    def test_int_fields_accept_hex(self):
        assert parse_config("link.register_seed = 0x1ACE").link.register_seed == 0x1ACE

    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("fiber.length_m 5500", "expected"),
            ("nosection = 1", "section"),
            ("fiber.colour = red", "colour"),
            ("bogus.key = 1", "bogus"),
            ("fiber.length_m = abc", "cannot read"),
            ("fiber.length_m = 1\nfiber.length_m = 2", "duplicate"),
            ("link.samples_per_symbol = none", "none"),
            ("modulator.type = laser", "modulator"),
            ("fiber.length_m = -5", "fiber"),
            ("edfa.enabled = maybe", "cannot read"),
            ("link.baud = inf", "cannot read"),
        ],
    )
    def test_errors(self, text, fragment):
        with pytest.raises(ConfigurationError, match=fragment):
            parse_config(text)

    def test_error_names_line(self):
        with pytest.raises(ConfigurationError, match=r"exp.cfg:3"):
            parse_config("# a\n\nfiber.len = 1\n", source="exp.cfg")


class TestRoundTrip:
    def test_canonical_text_round_trips(self):
        cfg = LinkConfig().with_overrides({"fiber.length_m": 960, "mzm.arm_ratio": 0.3, "voa.rop_dbm": -2.5})
        again = parse_config(cfg.to_text())
        assert again == cfg
        assert again.to_text() == cfg.to_text()
        assert again.config_hash() == cfg.config_hash()

    @settings(max_examples=25, deadline=None)
    @given(
        length=st.floats(0, 20_000, allow_nan=False),
        ratio=st.floats(0.05, 3.0),
        rop=st.one_of(st.none(), st.floats(-30, 10)),
        seed=st.integers(1, 2**31),
    )
    def test_property_round_trip(self, length, ratio, rop, seed):
        cfg = LinkConfig().with_overrides(
            {"fiber.length_m": length, "mzm.arm_ratio": ratio, "voa.rop_dbm": rop, "link.master_seed": seed}
        )
        assert parse_config(cfg.to_text()) == cfg

    def test_hash_changes_with_any_key(self):
        base = LinkConfig()
        assert base.with_overrides({"dsp.step_mu": 2e-3}).config_hash() != base.config_hash()
        assert base.with_overrides({"link.master_seed": 2}).config_hash() != base.config_hash()

    def test_hash_is_stable(self):
        assert LinkConfig().config_hash() == LinkConfig().config_hash()
        assert len(LinkConfig().config_hash()) == 16


class TestDemos:
    @pytest.mark.parametrize("name", DEMOS)
    def test_loads(self, name):
        cfg = load_config(demo_config_path(name))
        assert cfg.dsp.dfe_configs()

    def test_link_configurations(self):
        assert not load_config(demo_config_path("mzm_5500m")).edfa.enabled
        assert load_config(demo_config_path("mzm_edfa")).edfa.enabled
        b2b = load_config(demo_config_path("tweam_b2b"))
        assert b2b.modulator.type == "dfb_tweam" and b2b.fiber.length == 0
        assert [e.label for e in b2b.dsp.dfe_configs()] == ["none"]

    def test_unknown_demo(self):
        with pytest.raises(ConfigurationError, match="available"):
            demo_config_path("nope")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "missing.cfg")


class TestDsp:
    def test_equalizer_list(self):
        cfg = parse_config("dsp.equalizers = none, 6/6, 12/6\ndsp.step_mu = 0.002")
        eqs = cfg.dsp.dfe_configs()
        assert [e.label for e in eqs] == ["none", "6/6", "12/6"]
        assert eqs[2].step_mu == 0.002

    def test_bad_equalizer(self):
        with pytest.raises(ConfigurationError):
            parse_config("dsp.equalizers = 6/x").dsp.dfe_configs()
