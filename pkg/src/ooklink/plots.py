"""File outputs for results: BER curves (SVG), eye histograms (PGM + CSV), spectra.

SVGs are written with a fixed hash salt and no date stamp, so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import FEC_THRESHOLD, EyeHistogram  # noqa: E402
from .pipeline import ResultRow  # noqa: E402
from .signal import Spectrum  # noqa: E402

SVG_RC = {"svg.hashsalt": "ooklink", "svg.fonttype": "none"}


def _save_svg(fig, path) -> None:
    with plt.rc_context(SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def _writable(path) -> Path:
    p = Path(path)
    if not p.parent.exists():
        raise OSError(f"output directory {p.parent} does not exist")
    return p


def plot_ber(rows: Sequence[ResultRow], out_path, x_axis: Optional[str] = None) -> Path:
    """BER against ``x_axis`` (or row index), one curve per equalizer.

    Rows sharing an x value and equalizer (e.g. repeated seeds) are averaged.
    The FEC threshold is drawn as a dashed line with gid ``threshold``.
    """
    out = _writable(out_path)
    groups: dict[str, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
    for i, r in enumerate(rows):
        if r.ber is None:
            continue
        axes = dict(r.axes)
        x = float(axes[x_axis]) if x_axis and x_axis in axes else float(i)
        groups[r.equalizer or "?"][x].append(r.ber.ber)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    floor = 1e-7
    for label in sorted(groups):
        pts = sorted(groups[label].items())
        xs = [p[0] for p in pts]
        ys = [max(float(np.mean(v)), floor) for v in [p[1] for p in pts]]
        (line,) = ax.semilogy(xs, ys, marker="o", label=f"DFE {label}" if label != "none" else "no equalizer")
        line.set_gid(f"curve-{label.replace('/', '-')}")
    thr = ax.axhline(FEC_THRESHOLD, color="k", linestyle="--", linewidth=1, label="HD-FEC 5e-3")
    thr.set_gid("threshold")
    ax.set_xlabel(x_axis or "run")
    ax.set_ylabel("BER")
    ax.set_ylim(floor, 1)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    _save_svg(fig, out)
    return out


def write_eye(hist: EyeHistogram, out_dir, stem: str = "eye", svg: bool = False) -> list[Path]:
    """Eye histogram as an ASCII PGM (amplitude rows, top = high) plus a counts CSV."""
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise OSError(f"output directory {out_dir} does not exist")
    img = hist.counts.T[::-1]  # rows: amplitude (descending), columns: time
    peak = int(img.max())
    maxval = max(1, min(peak, 65535))
    if peak > 65535:
        img = np.round(img * (65535 / peak)).astype(np.int64)
    height, width = img.shape
    pgm = out_dir / f"{stem}.pgm"
    with open(pgm, "w") as fh:
        fh.write(f"P2\n{width} {height}\n{maxval}\n")
        for row in img:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")
    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_ui", "amplitude", "count"])
        tc = 0.5 * (hist.time_edges[:-1] + hist.time_edges[1:])
        ac = 0.5 * (hist.amplitude_edges[:-1] + hist.amplitude_edges[1:])
        for i, t in enumerate(tc):
            for j, a in enumerate(ac):
                w.writerow([format(t, ".17g"), format(a, ".17g"), int(hist.counts[i, j])])
    paths = [pgm, csv_path]
    if svg:
        fig, ax = plt.subplots(figsize=(6, 4.5))
        ax.imshow(
            np.log1p(img),
            aspect="auto",
            cmap="gray",
            extent=(0, 2, hist.amplitude_edges[0], hist.amplitude_edges[-1]),
        )
        ax.set_xlabel("time (UI)")
        ax.set_ylabel("amplitude")
        p = out_dir / f"{stem}.svg"
        _save_svg(fig, p)
        paths.append(p)
    return paths


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Parse an ASCII (P2) graymap into ``(pixels, maxval)``."""
    tokens = Path(path).read_text().split()
    if tokens[0] != "P2":
        raise ValueError("not an ASCII PGM")
    width, height, maxval = (int(t) for t in tokens[1:4])
    px = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    if px.size != width * height:
        raise ValueError("PGM pixel count mismatch")
    return px.reshape(height, width), maxval


def write_spectrum(spec: Spectrum, out_dir, stem: str = "spectrum", svg: bool = True) -> list[Path]:
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise OSError(f"output directory {out_dir} does not exist")
    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frequency_hz", f"psd_{spec.unit.replace('/', '_per_')}"])
        for f, p in zip(spec.frequencies, spec.psd):
            w.writerow([format(float(f), ".17g"), format(float(p), ".17g")])
    paths = [csv_path]
    if svg:
        fig, ax = plt.subplots(figsize=(6, 4.5))
        if spec.unit == "W/Hz":
            # dBm per resolution bandwidth, as an optical spectrum analyser shows it
            y = spec.psd_dbm_per_hz() + 10 * np.log10(spec.resolution_bw)
            ax.set_ylabel(f"power (dBm / {spec.resolution_bw / 1e6:.3g} MHz)")
        else:
            y = spec.psd_db()
            ax.set_ylabel(f"PSD (dB {spec.unit})")
        (line,) = ax.plot(spec.frequencies / 1e9, y, linewidth=0.8)
        line.set_gid("spectrum")
        ax.set_xlabel("frequency offset (GHz)")
        ax.grid(True, alpha=0.3)
        p = out_dir / f"{stem}.svg"
        _save_svg(fig, p)
        paths.append(p)
    return paths
