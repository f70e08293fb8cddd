"""Render figures from simulator CSV artifacts.

Consumes only the documented CSV formats (metrics/sweep rows, trade-off
curves, JSI grids, coincidence histograms); the simulator package itself
is never imported.  Output format follows the file extension, and SVG
output is byte-reproducible for identical inputs.
"""

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["FIGURE_KINDS", "load_table", "render", "main"]

# fixed salt keeps SVG element ids stable across runs
plt.rcParams["svg.hashsalt"] = "qnetplot"


class InputError(ValueError):
    """Bad or missing input data."""


def load_table(path: Path) -> tuple[list[str], list[list[str]]]:
    """Read one artifact: optional leading # comment, header, rows."""
    with open(path, newline="") as handle:
        rows = [r for r in csv.reader(handle) if r]
    if rows and rows[0] and rows[0][0].startswith("#"):
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no header row")
    header, data = rows[0], rows[1:]
    if not data:
        raise InputError(f"{path}: no data rows")
    return header, data


def _column(header, rows, name, path, cast=float):
    if name not in header:
        raise InputError(f"{path}: missing column {name!r}")
    idx = header.index(name)
    try:
        return [cast(row[idx]) for row in rows]
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: column {name!r}: {exc}") from exc


def _load_many(paths, columns):
    """Concatenate named columns across input files into one dict."""
    out = {name: [] for name, _ in columns}
    for path in paths:
        header, rows = load_table(path)
        for name, cast in columns:
            out[name].extend(_column(header, rows, name, path, cast))
    return out


def _new_axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _by_link(data):
    links = sorted(set(data["link"]))
    mask = np.asarray(data["link"])
    return [(link, mask == link) for link in links]


def fig_metrics_vs_power(paths):
    """CAR vs pump power, one errorbar series per link."""
    data = _load_many(
        paths,
        (("pump_power_mw", float), ("car", float), ("car_err", float), ("link", str)),
    )
    power = np.asarray(data["pump_power_mw"])
    car = np.asarray(data["car"])
    err = np.asarray(data["car_err"])
    fig, ax = _new_axes("Coincidence-to-accidental ratio", "pump power (mW)", "CAR")
    for link, sel in _by_link(data):
        order = np.argsort(power[sel])
        ax.errorbar(
            power[sel][order], car[sel][order], yerr=err[sel][order],
            marker="o", capsize=3, label=link,
        )
    ax.set_xscale("log")
    ax.legend()
    return fig


def fig_tradeoff(paths):
    """Key rate vs clock rate with the optimum marked, one curve per file."""
    fig, ax = _new_axes(
        "Repetition-rate trade-off", "repetition rate (MHz)", "secure key rate (1/s)"
    )
    for path in paths:
        header, rows = load_table(path)
        rate = np.asarray(_column(header, rows, "rep_rate_hz", path)) / 1e6
        total = np.asarray(_column(header, rows, "total_rate", path))
        per_channel = np.asarray(_column(header, rows, "per_channel_rate", path))
        stem = Path(path).stem
        (line,) = ax.plot(rate, total, label=f"{stem}: total")
        ax.plot(
            rate, per_channel, linestyle="--", color=line.get_color(),
            label=f"{stem}: per channel",
        )
        best = int(np.argmax(total))
        ax.plot(rate[best], total[best], marker="v", color=line.get_color())
    ax.set_yscale("log")
    ax.legend()
    return fig


def fig_jsi_heatmap(paths):
    """Joint spectral intensity grid as a wavelength-wavelength heatmap."""
    if len(paths) != 1:
        raise InputError("jsi-heatmap takes exactly one input file")
    path = paths[0]
    header, rows = load_table(path)
    if not header or header[0] != "signal_nm":
        raise InputError(f"{path}: missing column 'signal_nm'")
    try:
        idler = np.asarray([float(v) for v in header[1:]])
        grid = np.asarray([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    signal, intensity = grid[:, 0], grid[:, 1:]
    if intensity.shape != (len(signal), len(idler)):
        raise InputError(f"{path}: ragged intensity grid")
    fig, ax = _new_axes(
        "Joint spectral intensity", "idler wavelength (nm)", "signal wavelength (nm)"
    )
    mesh = ax.pcolormesh(idler, signal, intensity, shading="nearest")
    fig.colorbar(mesh, ax=ax, label="normalized intensity")
    return fig


def fig_histogram(paths):
    """Coincidence counts vs arrival-time offset, one step trace per link."""
    data = _load_many(
        paths, (("offset_ps", float), ("counts", float), ("link", str))
    )
    offset = np.asarray(data["offset_ps"])
    counts = np.asarray(data["counts"])
    fig, ax = _new_axes("Coincidence histogram", "delay (ps)", "counts")
    for link, sel in _by_link(data):
        order = np.argsort(offset[sel])
        ax.step(offset[sel][order], counts[sel][order], where="mid", label=link)
    ax.legend()
    return fig


FIGURE_KINDS = {
    "metrics-vs-power": fig_metrics_vs_power,
    "tradeoff": fig_tradeoff,
    "jsi-heatmap": fig_jsi_heatmap,
    "histogram": fig_histogram,
}


def render(kind: str, paths, out: Path) -> None:
    """Build one figure and write it.

    Unreadable inputs raise InputError; only the final write raises OSError.
    """
    try:
        fig = FIGURE_KINDS[kind]([Path(p) for p in paths])
    except OSError as exc:
        raise InputError(str(exc)) from exc
    try:
        # dropping the date keeps SVG output byte-reproducible
        fig.savefig(out, metadata={"Date": None} if out.suffix == ".svg" else None)
    finally:
        plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnetplot", description="Render figures from simulator CSV artifacts."
    )
    parser.add_argument("--kind", required=True, choices=sorted(FIGURE_KINDS))
    parser.add_argument(
        "--in", dest="inputs", action="append", required=True,
        metavar="CSV", help="input CSV file (repeatable)",
    )
    parser.add_argument("--out", required=True, help="output image (.svg, .png, .pdf)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        render(args.kind, args.inputs, Path(args.out))
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
