"""Declarative link configuration in a flat ``section.key = value`` text format.

Grammar (one statement per line)::

    # comment                      full-line or trailing comment
    section.key = value            value: number, true/false, none, or bare text

Numbers accept Python float/int syntax (``140e9``, ``0x7FFF``, ``-1.85``).
Unknown sections or keys are errors; omitted keys keep their defaults.
Sections map one-to-one onto dataclasses below, and values are coerced to the
declared field type.
"""

from __future__ import annotations

import hashlib
import math
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

from .dsp import DfeConfig
from .errors import ConfigurationError
from .optics import EamSpec, EdfaSpec, FiberSpec, LaserSpec, MzmSpec
from .rx import DsoSpec, PhotodiodeSpec
from .tx import DriverSpec, SelectorSpec


@dataclass(frozen=True)
class LinkSection:
    baud: float = 140e9
    samples_per_symbol: int = 8
    pattern_periods: int = 2
    master_seed: int = 1
    register_seed: int = 0x7FFF
    bpg_delay: int = 16384
    sel2_delay: int = 8191

    def __post_init__(self):
        if not self.baud > 0:
            raise ConfigurationError("link.baud must be > 0")
        if self.pattern_periods < 1:
            raise ConfigurationError("link.pattern_periods must be >= 1")
        if self.master_seed < 0:
            raise ConfigurationError("link.master_seed must be >= 0")


@dataclass(frozen=True)
class ModulatorSection:
    type: str = "mzm"

    def __post_init__(self):
        if self.type not in ("mzm", "dfb_tweam"):
            raise ConfigurationError(f"modulator.type must be mzm or dfb_tweam, got {self.type!r}")


@dataclass(frozen=True)
class EdfaSection:
    enabled: bool = False
    gain_db: float = 20.0
    noise_figure_db: float = 5.0

    def spec(self) -> EdfaSpec:
        return EdfaSpec(self.gain_db, self.noise_figure_db)


@dataclass(frozen=True)
class VoaSection:
    """``rop_dbm`` is the power at the receiver input (before the EDFA when fitted)."""

    rop_dbm: Optional[float] = None


@dataclass(frozen=True)
class DspSection:
    equalizers: str = "none, 6/6, 12/6"
    guard_symbols: int = 256
    step_mu: float = 1e-3
    train_symbols: int = 32768
    passes: int = 3
    cursor_delay: Optional[int] = None
    min_confidence_db: float = 6.0

    def __post_init__(self):
        if self.guard_symbols < 0:
            raise ConfigurationError("dsp.guard_symbols must be >= 0")
        self.dfe_configs()  # validate early

    def dfe_configs(self) -> list[DfeConfig]:
        items = [s for s in self.equalizers.replace(";", ",").split(",") if s.strip()]
        if not items:
            raise ConfigurationError("dsp.equalizers lists no equalizer")
        out = []
        for item in items:
            proto = DfeConfig.parse(item, step_mu=self.step_mu, train_symbols=self.train_symbols, passes=self.passes)
            if not proto.frozen and self.cursor_delay is not None:
                proto = replace(proto, cursor_delay=min(self.cursor_delay, proto.n_ff - 1))
            out.append(proto)
        return out


@dataclass(frozen=True)
class LinkConfig:
    link: LinkSection = field(default_factory=LinkSection)
    selector: SelectorSpec = field(default_factory=SelectorSpec)
    driver: DriverSpec = field(default_factory=DriverSpec)
    laser: LaserSpec = field(default_factory=LaserSpec)
    modulator: ModulatorSection = field(default_factory=ModulatorSection)
    mzm: MzmSpec = field(default_factory=MzmSpec)
    eam: EamSpec = field(default_factory=EamSpec)
    fiber: FiberSpec = field(default_factory=FiberSpec)
    edfa: EdfaSection = field(default_factory=EdfaSection)
    voa: VoaSection = field(default_factory=VoaSection)
    photodiode: PhotodiodeSpec = field(default_factory=PhotodiodeSpec)
    dso: DsoSpec = field(default_factory=DsoSpec)
    dsp: DspSection = field(default_factory=DspSection)

    @property
    def edfa_spec(self) -> Optional[EdfaSpec]:
        return self.edfa.spec() if self.edfa.enabled else None

    def with_overrides(self, overrides: dict[str, Any]) -> "LinkConfig":
        """Copy with dotted-key overrides; values may be text or already typed."""
        grouped: dict[str, dict[str, Any]] = {}
        for key, value in overrides.items():
            section, name = _split_key(key)
            grouped.setdefault(section, {})[name] = _coerce(section, name, value)
        updates = {}
        for section, values in grouped.items():
            try:
                updates[section] = replace(getattr(self, section), **values)
            except ConfigurationError as exc:
                raise ConfigurationError(f"[{section}] {exc}") from None
        return replace(self, **updates)

    def to_text(self) -> str:
        """Canonical serialization: every key, in declaration order."""
        lines = []
        for sec in fields(self):
            obj = getattr(self, sec.name)
            for f in fields(obj):
                key = _REVERSE_ALIASES.get((sec.name, f.name), f.name)
                lines.append(f"{sec.name}.{key} = {format_value(getattr(obj, f.name))}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


# config keys that differ from the dataclass field name
_ALIASES = {("fiber", "length_m"): "length"}
_REVERSE_ALIASES = {(s, f): k for (s, k), f in _ALIASES.items()}
_SECTIONS = {f.name: f for f in fields(LinkConfig)}


def _section_type(section: str):
    hints = typing.get_type_hints(LinkConfig)
    return hints[section]


def _split_key(key: str) -> tuple[str, str]:
    parts = key.strip().split(".")
    if len(parts) != 2 or not all(parts):
        raise ConfigurationError(f"key {key!r} must have the form section.name")
    section, name = parts
    if section not in _SECTIONS:
        raise ConfigurationError(f"unknown section {section!r}; expected one of {sorted(_SECTIONS)}")
    name = _ALIASES.get((section, name), name)
    names = {f.name for f in fields(_section_type(section))}
    if name not in names:
        raise ConfigurationError(f"unknown key {section}.{name}; expected one of {sorted(names)}")
    return section, name


def _field_type(section: str, name: str):
    return typing.get_type_hints(_section_type(section))[name]


def _coerce(section: str, name: str, value: Any):
    tp = _field_type(section, name)
    optional = False
    if typing.get_origin(tp) is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        optional = len(args) < len(typing.get_args(tp))
        tp = args[0]
    where = f"{section}.{name}"
    if isinstance(value, str):
        text = value.strip()
        if text.lower() == "none" and tp is not str:
            if optional:
                return None
            raise ConfigurationError(f"{where} may not be none")
        try:
            if tp is bool:
                if text.lower() in ("true", "yes", "on", "1"):
                    return True
                if text.lower() in ("false", "no", "off", "0"):
                    return False
                raise ValueError(text)
            if tp is int:
                return int(text, 0)
            if tp is float:
                v = float(text)
                if not math.isfinite(v):
                    raise ValueError(text)
                return v
            return text
        except ValueError:
            raise ConfigurationError(f"{where}: cannot read {text!r} as {tp.__name__}") from None
    if value is None:
        if optional:
            return None
        raise ConfigurationError(f"{where} may not be none")
    if tp is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigurationError(f"{where} must be an integer, got {value}")
        return int(value)
    if tp is float:
        return float(value)
    if tp is bool:
        return bool(value)
    return str(value)


def format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def parse_config(text: str, source: str = "<string>") -> LinkConfig:
    overrides: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            section, name = _split_key(key)
        except ConfigurationError as exc:
            raise ConfigurationError(f"{source}:{lineno}: {exc}") from None
        canonical = f"{section}.{name}"
        if canonical in overrides:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key}")
        overrides[canonical] = value
    return LinkConfig().with_overrides(overrides)


def load_config(path) -> LinkConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


def demo_config_path(name: str) -> Path:
    """Path of a shipped demo config (``name`` with or without ``.cfg``)."""
    base = Path(__file__).parent / "configs"
    p = base / (name if name.endswith(".cfg") else name + ".cfg")
    if not p.exists():
        available = sorted(q.stem for q in base.glob("*.cfg"))
        raise ConfigurationError(f"no demo config {name!r}; available: {available}")
    return p

