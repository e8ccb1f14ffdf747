"""End-to-end link execution, capture processing and parameter sweeps."""

from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .config import LinkConfig, _coerce, _split_key, format_value
from .dsp import (
    BerRecord,
    DfeConfig,
    TimingEstimate,
    align_reference,
    clock_recover,
    count_errors,
    dfe_equalize,
    resample_to_symbols,
)
from .errors import ConfigurationError, LinkSimError
from .metrics import fec_verdict, q_factor
from .optics import (
    cw_laser,
    eam_modulate,
    edfa_amplify,
    fiber_propagate,
    mzm_modulate,
    set_received_power,
)
from .rng import RngStream, derive_seed
from .rx import dso_capture, photodetect
from .signal import ComplexEnvelope, RealWaveform
from .tx import BitSequence, driver_amplify, etdm_pattern, nrz_synthesize

SCHEMA_VERSION = 1
MAX_SWEEP_POINTS = 500
MAX_SWEEP_AXES = 3
REPEAT_AXIS = "repeat"

CSV_COLUMNS = (
    "schema_version",
    "config_hash",
    "seed",
    "equalizer",
    "errors",
    "bits",
    "ber",
    "ci_low",
    "ci_high",
    "fec_pass",
    "margin_db",
    "q_factor",
    "alignment",
    "polarity",
    "timing_phase",
    "timing_confidence_db",
    "flags",
    "error",
)


@dataclass(frozen=True, eq=False)
class LinkTrace:
    """Intermediate signals of one simulated run."""

    pattern: BitSequence
    drive: RealWaveform
    tx_field: ComplexEnvelope
    rx_field: ComplexEnvelope
    capture: RealWaveform
    voa_db: Optional[float]


@dataclass(frozen=True)
class ResultRow:
    config_hash: str
    seed: int
    equalizer: str
    ber: Optional[BerRecord] = None
    q: Optional[float] = None
    timing: Optional[TimingEstimate] = None
    axes: tuple[tuple[str, object], ...] = ()
    error: str = ""
    flags: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict[str, object]:
        row: dict[str, object] = {
            "schema_version": SCHEMA_VERSION,
            "config_hash": self.config_hash,
            "seed": self.seed,
        }
        row.update({name: value for name, value in self.axes})
        row["equalizer"] = self.equalizer
        b = self.ber
        if b is not None:
            verdict = fec_verdict(b.ber, bits=b.bits)
            row.update(
                errors=b.errors,
                bits=b.bits,
                ber=b.ber,
                ci_low=b.confidence_interval[0],
                ci_high=b.confidence_interval[1],
                fec_pass=verdict.passed and not b.sync_failed,
                margin_db=verdict.margin_db,
                alignment=b.alignment_offset,
                polarity=b.polarity,
            )
        row["q_factor"] = self.q
        if self.timing is not None:
            row["timing_phase"] = self.timing.phase_offset
            row["timing_confidence_db"] = self.timing.confidence
        row["flags"] = ";".join(self.flags)
        row["error"] = self.error
        return row


def simulate_link(cfg: LinkConfig) -> LinkTrace:
    """TX -> modulator -> fiber -> VOA/EDFA -> photodiode -> DSO for one seed."""
    lk = cfg.link
    root = RngStream(lk.master_seed)
    pattern = etdm_pattern(lk.register_seed, lk.bpg_delay, lk.sel2_delay)
    bits = pattern.tiled(lk.pattern_periods)
    drive = nrz_synthesize(bits, lk.baud, lk.samples_per_symbol, cfg.selector, root.child("jitter"))
    fs = drive.sample_rate
    carrier = cw_laser(cfg.laser, len(drive), fs)
    if cfg.modulator.type == "mzm":
        # differential selector output drives the two arms directly
        tx = mzm_modulate(carrier, drive, cfg.mzm)
    else:
        tx = eam_modulate(carrier, driver_amplify(drive, cfg.driver), cfg.eam)
    rx = fiber_propagate(tx, cfg.fiber)
    voa_db = None
    if cfg.voa.rop_dbm is not None:
        rx, voa_db = set_received_power(rx, cfg.voa.rop_dbm)
    if cfg.edfa.enabled:
        rx = edfa_amplify(rx, cfg.edfa.spec(), root.child("ase"))
    current = photodetect(rx, cfg.photodiode, root.child("photodiode"))
    capture = dso_capture(current, cfg.dso, baud=lk.baud)
    return LinkTrace(pattern, drive, tx, rx, capture, voa_db)


def process_capture(
    capture: RealWaveform,
    pattern: BitSequence,
    baud: float,
    equalizers: Sequence[DfeConfig],
    guard_symbols: int = 256,
    min_confidence_db: float = 6.0,
) -> tuple[TimingEstimate, list[tuple[DfeConfig, BerRecord, float]]]:
    """Offline DSP on a stored capture: clock recovery, resampling, DFE, counting.

    Symbol samples are standardized (zero mean, unit variance) before the
    equalizer, then softly correlated against the pattern to find the
    training alignment and polarity.
    """
    timing = clock_recover(capture, baud, min_confidence_db)
    sym = resample_to_symbols(capture, baud, timing, guard_symbols)
    std = float(np.std(sym))
    if std == 0:
        raise ConfigurationError("captured record is constant")
    x = (sym - sym.mean()) / std
    shift, polarity, _ = align_reference(x, pattern)
    n = x.size
    ref = BitSequence(pattern.bits[(np.arange(n) + shift) % len(pattern)])
    if polarity < 0:
        ref = ref.inverted()
    results = []
    for eq in equalizers:
        res = dfe_equalize(x, eq, ref)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rec = count_errors(res.decisions, pattern)
        ref_tail = BitSequence(ref.bits[res.discarded : res.discarded + res.soft.size])
        try:
            q = q_factor(res.soft, ref_tail)
        except LinkSimError:
            q = math.nan
        flags = list(rec.flags)
        if rec.errors < 10:
            flags.append("unreliable")
        if rec.bits < 100_000:
            flags.append("short_record")
        rec = replace(rec, equalizer=eq.label, flags=tuple(flags))
        results.append((eq, rec, q))
    return timing, results


def run_single(cfg: LinkConfig, axes: tuple = (), trace: Optional[LinkTrace] = None) -> list[ResultRow]:
    """One end-to-end run; one row per configured equalizer.

    ``trace`` reuses an already simulated link for ``cfg``.
    """
    if trace is None:
        trace = simulate_link(cfg)
    timing, results = process_capture(
        trace.capture,
        trace.pattern,
        cfg.link.baud,
        cfg.dsp.dfe_configs(),
        cfg.dsp.guard_symbols,
        cfg.dsp.min_confidence_db,
    )
    h = cfg.config_hash()
    return [
        ResultRow(h, cfg.link.master_seed, eq.label, rec, q, timing, axes, flags=rec.flags)
        for eq, rec, q in results
    ]


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepAxis:
    name: str
    values: tuple

    @classmethod
    def parse(cls, text: str) -> "SweepAxis":
        """``name=start:step:stop`` (inclusive) or ``name=v1,v2,...``."""
        if "=" not in text:
            raise ConfigurationError(f"axis {text!r} must look like name=start:step:stop")
        name, spec = (s.strip() for s in text.split("=", 1))
        if not spec:
            raise ConfigurationError(f"axis {name} has no values")
        if ":" in spec:
            try:
                start, step, stop = (float(p) for p in spec.split(":"))
            except ValueError:
                raise ConfigurationError(f"cannot parse range {spec!r}; use start:step:stop") from None
            if step == 0 or (stop - start) / step < 0:
                raise ConfigurationError(f"range {spec!r} is empty or has zero step")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            if count > MAX_SWEEP_POINTS:
                raise ConfigurationError(f"range {spec!r} has {count} points (cap {MAX_SWEEP_POINTS})")
            raw = [float(f"{start + i * step:.12g}") for i in range(count)]
        else:
            raw = [v.strip() for v in spec.split(",") if v.strip()]
        if not raw:
            raise ConfigurationError(f"axis {name} has no values")
        if name == REPEAT_AXIS:
            values = tuple(int(float(v)) for v in raw)
        else:
            section, key = _split_key(name)
            values = tuple(_coerce(section, key, v) for v in raw)
        return cls(name, values)


@dataclass(frozen=True)
class SweepSpec:
    """Cross product of up to three axes.

    The pseudo-axis ``repeat`` only changes the per-point seed, which is how
    seed-averaged curves are requested.
    """

    axes: tuple[SweepAxis, ...]
    max_points: int = MAX_SWEEP_POINTS

    def __post_init__(self):
        if len(self.axes) > MAX_SWEEP_AXES:
            raise ConfigurationError(f"at most {MAX_SWEEP_AXES} sweep axes")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ConfigurationError("duplicate sweep axis")
        if self.size > self.max_points:
            raise ConfigurationError(f"sweep has {self.size} points, cap is {self.max_points}")

    @classmethod
    def parse(cls, texts: Sequence[str], max_points: int = MAX_SWEEP_POINTS) -> "SweepSpec":
        return cls(tuple(SweepAxis.parse(t) for t in texts), max_points)

    @property
    def size(self) -> int:
        return math.prod(len(a.values) for a in self.axes)

    def points(self) -> list[tuple[tuple[str, object], ...]]:
        if not self.axes:
            return [()]
        combos = itertools.product(*(a.values for a in self.axes))
        pts = [tuple(zip((a.name for a in self.axes), c)) for c in combos]
        return sorted(pts, key=lambda p: tuple(v for _, v in p))


def point_key(point) -> str:
    return ";".join(f"{k}={format_value(v)}" for k, v in point)


def point_config(cfg: LinkConfig, point) -> tuple[LinkConfig, int]:
    overrides = {k: v for k, v in point if k != REPEAT_AXIS}
    pcfg = cfg.with_overrides(overrides) if overrides else cfg
    seed = derive_seed(cfg.link.master_seed, point_key(point))
    return pcfg, seed


def _run_point(args) -> list[ResultRow]:
    cfg, point = args
    try:
        pcfg, seed = point_config(cfg, point)
    except ConfigurationError as exc:
        return [ResultRow("", 0, "", axes=point, error=str(exc), flags=("config_error",))]
    h = pcfg.config_hash()
    seeded = pcfg.with_overrides({"link.master_seed": seed})
    try:
        rows = run_single(seeded, axes=point)
    except LinkSimError as exc:
        stage = exc.stage or type(exc).__name__
        return [ResultRow(h, seed, "", axes=point, error=str(exc), flags=(f"failed:{stage}",))]
    return [replace(r, config_hash=h) for r in rows]


def run_sweep(cfg: LinkConfig, sweep: SweepSpec, workers: int = 1) -> list[ResultRow]:
    """Evaluate every point of the cross product.

    Each point runs with seed ``derive_seed(master_seed, point_key)``, so a
    point's noise never depends on which other points are in the sweep.
    Failures become flagged rows.  Rows come back in axis-sorted order
    whatever the worker count.
    """
    tasks = [(cfg, p) for p in sweep.points()]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_point, tasks))
    else:
        chunks = [_run_point(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


# ---------------------------------------------------------------- CSV


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    axis_names: list[str] = []
    for r in rows:
        for name, _ in r.axes:
            if name not in axis_names:
                axis_names.append(name)
    columns = list(CSV_COLUMNS[:3]) + axis_names + list(CSV_COLUMNS[3:])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        d = r.as_dict()
        writer.writerow([_fmt(d.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(rows: Sequence[ResultRow], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
