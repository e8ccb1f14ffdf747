"""Command-line front end.

Exit status: 0 success, 1 configuration error, 2 runtime or DSP failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import LinkConfig, demo_config_path, load_config
from .dsp import DfeConfig
from .errors import ConfigurationError, LinkSimError
from .metrics import eye_histogram, sideband_asymmetry
from .pipeline import (
    ResultRow,
    SweepSpec,
    process_capture,
    rows_to_csv,
    run_single,
    run_sweep,
    simulate_link,
)
from .signal import RealWaveform, psd
from .tx import etdm_pattern
from .waveio import load_waveform, save_waveform

log = logging.getLogger("ooklink")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _resolve_config(arg: str | None, seed: int | None = None) -> LinkConfig:
    if arg is None:
        cfg = LinkConfig()
    else:
        p = Path(arg)
        cfg = load_config(p if p.exists() or p.suffix else demo_config_path(arg))
    if seed is not None:
        cfg = cfg.with_overrides({"link.master_seed": seed})
    return cfg


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report(rows: list[ResultRow]) -> None:
    for r in rows:
        if r.ber is None:
            print(f"{r.equalizer or '-':>6}  FAILED  {r.error}")
            continue
        b = r.ber
        verdict = "pass" if b.ber < 5e-3 and not b.sync_failed else "FAIL"
        extra = f"  [{';'.join(r.flags)}]" if r.flags else ""
        print(f"{r.equalizer:>6}  BER {b.ber:.3e}  ({b.errors}/{b.bits})  FEC {verdict}{extra}")


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args.config, args.seed)
    out = _out_dir(args.out)
    trace = simulate_link(cfg)
    if args.save_capture:
        save_waveform(out / "capture.lwsim", trace.capture)
    rows = run_single(cfg, trace=trace)
    (out / "results.csv").write_text(rows_to_csv(rows))
    (out / "config.cfg").write_text(cfg.to_text())
    if args.svg:
        from .plots import plot_ber

        plot_ber(rows, out / "ber.svg")
    _report(rows)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args.config, args.seed)
    sweep = SweepSpec.parse(args.axis or [], max_points=args.max_points)
    out = _out_dir(args.out)
    log.info("sweep of %d points", sweep.size)
    rows = run_sweep(cfg, sweep, workers=args.workers)
    (out / "sweep.csv").write_text(rows_to_csv(rows))
    (out / "config.cfg").write_text(cfg.to_text())
    if args.svg:
        from .plots import plot_ber

        x_axis = next((a.name for a in sweep.axes if a.name != "repeat"), None)
        plot_ber(rows, out / "ber.svg", x_axis=x_axis)
    failed = sum(1 for r in rows if r.error)
    print(f"{len(rows)} rows, {failed} failed -> {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_eye(args) -> int:
    from .dsp import clock_recover
    from .plots import write_eye

    cfg = _resolve_config(args.config, args.seed)
    out = _out_dir(args.out)
    capture = simulate_link(cfg).capture
    timing = clock_recover(capture, cfg.link.baud, cfg.dsp.min_confidence_db)
    hist = eye_histogram(capture, cfg.link.baud, timing, bins=(args.bins, args.bins))
    paths = write_eye(hist, out, svg=args.svg)
    print(f"eye: {hist.samples} samples, phase {timing.phase_offset:+.3f} UI -> {paths[0]}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    from .plots import write_spectrum

    cfg = _resolve_config(args.config, args.seed)
    out = _out_dir(args.out)
    tx = simulate_link(cfg).tx_field
    spec = psd(tx, args.rbw)
    write_spectrum(spec, out, svg=True)
    band = args.band if args.band else cfg.link.baud
    asym = sideband_asymmetry(tx, band)
    (out / "asymmetry.txt").write_text(f"{asym:.17g}\n")
    print(f"sideband asymmetry over +-{band / 1e9:g} GHz: {asym:+.2f} dB")
    return EXIT_OK


def cmd_waveform_process(args) -> int:
    cfg = _resolve_config(args.config)
    w = load_waveform(args.input)
    if not isinstance(w, RealWaveform):
        raise ConfigurationError("waveform-process needs a real (detected) capture")
    lk = cfg.link
    baud = args.baud or lk.baud
    pattern = etdm_pattern(lk.register_seed, lk.bpg_delay, lk.sel2_delay)
    d = cfg.dsp
    eqs = [DfeConfig.parse(s, step_mu=d.step_mu, train_symbols=d.train_symbols, passes=d.passes) for s in args.dfe]
    timing, results = process_capture(w, pattern, baud, eqs, d.guard_symbols, d.min_confidence_db)
    h = cfg.config_hash()
    rows = [ResultRow(h, lk.master_seed, eq.label, rec, q, timing, flags=rec.flags) for eq, rec, q in results]
    out = _out_dir(args.out)
    (out / "results.csv").write_text(rows_to_csv(rows))
    _report(rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ooklink", description="140 Gbaud OOK IM/DD link simulator and receiver DSP")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--config", help="config file, or the name of a shipped demo config")
        sp.add_argument("--out", required=True, help="output directory")
        if seed:
            sp.add_argument("--seed", type=int, help="override link.master_seed")

    sp = sub.add_parser("simulate", help="one end-to-end run, one CSV row per equalizer")
    common(sp)
    sp.add_argument("--svg", action="store_true", help="also write ber.svg")
    sp.add_argument("--save-capture", action="store_true", help="store the DSO capture as capture.lwsim")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="cross-product parameter sweep")
    common(sp)
    sp.add_argument("--axis", action="append", help="name=start:step:stop or name=v1,v2 (repeatable)")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--max-points", type=int, default=500)
    sp.add_argument("--svg", action="store_true")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("eye", help="eye histogram of the DSO capture (PGM + CSV)")
    common(sp)
    sp.add_argument("--bins", type=int, default=128)
    sp.add_argument("--svg", action="store_true")
    sp.set_defaults(func=cmd_eye)

    sp = sub.add_parser("spectrum", help="optical spectrum at the modulator output")
    common(sp)
    sp.add_argument("--rbw", type=float, default=1e9, help="resolution bandwidth in Hz")
    sp.add_argument("--band", type=float, help="sideband integration band in Hz (default: baud)")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("waveform-process", help="offline DSP on a stored capture")
    sp.add_argument("--input", required=True)
    sp.add_argument("--dfe", action="append", required=True, help="nff,nfb or 'none' (repeatable)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--config", help="config supplying baud, pattern and DSP settings")
    sp.add_argument("--baud", type=float)
    sp.set_defaults(func=cmd_waveform_process)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LinkSimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
