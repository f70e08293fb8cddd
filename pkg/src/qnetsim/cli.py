"""Command-line surface: simulate, analyze, plan, sweep, topology, jsi.

Every subcommand is a thin wrapper over one library operation and emits
CSV so downstream tooling never needs to import this package.  All CSV
files start with a comment line carrying the artifact version and the
seed, followed by a header row.

Exit codes: 0 success, 1 output I/O failure, 2 validation or input error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .detection import Clicks, DetectorSpec, read_tag_file, write_tag_file
from .engine import (
    ConfigError,
    ScenarioConfig,
    SweepSpec,
    analyze_tags,
    config_to_dict,
    default_scenario,
    link_histograms,
    parse_config,
    simulate_tags,
    sweep,
    write_config_ini,
)
from .planner import optimize_rep_rate
from .source import (
    SourceSpec,
    compute_jsi,
    crosstalk_matrix,
    jsi_channel_bounds,
    make_pump_channels,
)
from .topology import (
    SwitchPosition,
    connectivity,
    merged_ground_connectivity,
    mode_for,
    path_loss,
)

METRICS_COLUMNS = (
    "pump_power_mw",
    "n_channels",
    "car",
    "car_err",
    "visibility",
    "qber",
    "gain",
    "skr_per_s",
)

_HIST_BIN_PS = 100.0
_HIST_SPAN_PERIODS = 2.2


def _comment(seed: int) -> str:
    return f"# qnetsim {__version__} seed={seed}"


def _write_csv(path: Path, seed: int, header: tuple[str, ...], rows) -> None:
    lines = [_comment(seed), ",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _metrics_rows(cfg: ScenarioConfig, results) -> list[tuple]:
    rows = []
    for link in sorted(results):
        car, rec = results[link]
        rows.append(
            (
                cfg.source.pump_power_mw,
                len(cfg.resolved_active()),
                rec.car,
                rec.car_error,
                rec.visibility,
                rec.qber,
                rec.gain,
                rec.skr_per_second,
                link,
                0,
                rec.flag,
            )
        )
    return rows


def _histogram_rows(cfg: ScenarioConfig, streams) -> list[tuple]:
    rows: list[tuple] = []
    for link, hist in sorted(link_histograms(cfg, streams, _HIST_BIN_PS).items()):
        for offset, count in zip(hist.offsets_ps, hist.counts):
            rows.append((link, offset, count))
    return rows


def _load_scenario(args) -> ScenarioConfig:
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cfg = parse_config(path.read_text())
    else:
        cfg = default_scenario()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    if getattr(args, "switch", None) is not None:
        cfg = dataclasses.replace(
            cfg, position=SwitchPosition(args.switch), merged_ground=False
        )
    return cfg


def _write_run_outputs(cfg: ScenarioConfig, streams, out: Path) -> list[str]:
    results = analyze_tags(cfg, streams)
    _write_csv(
        out / "metrics.csv",
        cfg.master_seed,
        METRICS_COLUMNS + ("link", "repetition", "flag"),
        _metrics_rows(cfg, results),
    )
    _write_csv(
        out / "histogram.csv",
        cfg.master_seed,
        ("link", "offset_ps", "counts"),
        _histogram_rows(cfg, streams),
    )
    return sorted(results)


def cmd_simulate(args) -> int:
    cfg = _load_scenario(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    streams = simulate_tags(cfg)
    tag_files = {}
    for detector_id, node in enumerate(sorted(streams)):
        filename = f"{node}.tags"
        write_tag_file(out / filename, streams[node], detector_id)
        tag_files[node] = {"file": filename, "detector_id": detector_id}
    links = _write_run_outputs(cfg, streams, out)
    manifest = {
        "artifact": "qnetsim",
        "version": __version__,
        "seed": cfg.master_seed,
        "config": config_to_dict(cfg),
        "config_ini": write_config_ini(cfg),
        "tag_files": tag_files,
        "links": links,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"simulated {cfg.n_pulses} pulses -> {out} ({len(streams)} detectors, {len(links)} links)")
    return 0


def cmd_analyze(args) -> int:
    indir = Path(args.indir)
    manifest_path = indir / "manifest.json"
    if not manifest_path.is_file():
        raise ConfigError(f"manifest not found: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    cfg = parse_config(manifest["config_ini"])
    streams: dict[str, Clicks] = {}
    for node, entry in manifest["tag_files"].items():
        clicks, detector_id = read_tag_file(indir / entry["file"])
        if detector_id != entry["detector_id"]:
            raise ConfigError(
                f"{entry['file']}: detector_id {detector_id} does not match "
                f"manifest entry {entry['detector_id']}"
            )
        streams[node] = clicks
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    links = _write_run_outputs(cfg, streams, out)
    print(f"analyzed {len(streams)} tag files -> {out} ({len(links)} links)")
    return 0


def cmd_plan(args) -> int:
    rates = np.linspace(args.rate_min_hz, args.rate_max_hz, args.points)
    det = DetectorSpec(
        name="plan",
        efficiency_by_band=((1.0, 1e9, 1.0),),
        jitter_ps=args.jitter_ps,
        dark_rate_cps=args.dark_cps,
        dead_time_ns=args.dead_time_ns,
    )
    source = SourceSpec(pump_power_mw=args.power_mw)
    points, best = optimize_rep_rate(
        source, det, args.signal_loss_db, rates.tolist(), idler_loss_db=args.idler_loss_db
    )
    _write_csv(
        Path(args.out),
        args.seed or 0,
        ("rep_rate_hz", "n_channels", "per_channel_rate", "total_rate"),
        ((p.rep_rate_hz, p.n_channels, p.per_channel_rate, p.total_rate) for p in points),
    )
    print(
        f"best: {best.rep_rate_hz:.4g} Hz with {best.n_channels} channels, "
        f"{best.total_rate:.4g} coincidences/s"
    )
    return 0


def _sweep_value(value):
    """CSV cell for a sweep value; channel sets print as digit strings."""
    if isinstance(value, tuple):
        return "".join(str(ch) for ch in value)
    return value


def cmd_sweep(args) -> int:
    cfg = _load_scenario(args)
    tokens = args.values.replace(",", " ").split()
    try:
        if args.parameter == "network.active_channels":
            # channel sets as digit strings, e.g. 01 means channels 0 and 1
            values = tuple(tuple(int(ch) for ch in tok) for tok in tokens)
        else:
            values = tuple(float(tok) for tok in tokens)
    except ValueError as exc:
        raise ConfigError(f"--values: {exc}") from exc
    spec = SweepSpec(parameter=args.parameter, values=values, repetitions=args.reps)
    rows = sweep(cfg, spec)
    _write_csv(
        Path(args.out),
        cfg.master_seed,
        METRICS_COLUMNS + ("link", "repetition", "flag", "parameter", "value"),
        (
            (
                r.pump_power_mw,
                r.n_channels,
                r.metrics.car,
                r.metrics.car_error,
                r.metrics.visibility,
                r.metrics.qber,
                r.metrics.gain,
                r.metrics.skr_per_second,
                r.link,
                r.repetition,
                r.metrics.flag,
                r.parameter,
                _sweep_value(r.value),
            )
            for r in rows
        ),
    )
    print(f"swept {args.parameter} over {len(values)} values x {args.reps} reps -> {args.out}")
    return 0


def cmd_topology(args) -> int:
    merged = args.switch == "merged"
    if merged:
        graph = merged_ground_connectivity()
        mode = mode_for(SwitchPosition.MIDDLE)
    else:
        position = SwitchPosition(args.switch)
        graph = connectivity(position)
        mode = mode_for(position)
    rows = []
    for edge in graph.edges:
        for a in edge.assignments:
            if mode.value == "satellite":
                sig_loss = path_loss("signal", mode).total_db
                idl_loss = path_loss(a.idler_to, mode).total_db
            else:
                sig_loss = path_loss(f"{a.signal_to}.signal", mode).total_db
                idl_loss = path_loss(f"{a.idler_to}.idler", mode).total_db
            rows.append(
                (
                    f"{edge.node_a}-{edge.node_b}",
                    a.pair.index,
                    a.pair.signal_nm,
                    a.pair.idler_nm,
                    a.signal_to,
                    a.idler_to,
                    round(sig_loss, 3),
                    round(idl_loss, 3),
                )
            )
    header = (
        "link",
        "pair_index",
        "signal_nm",
        "idler_nm",
        "signal_to",
        "idler_to",
        "signal_loss_db",
        "idler_loss_db",
    )
    if args.out:
        _write_csv(Path(args.out), args.seed or 0, header, rows)
    else:
        print(_comment(args.seed or 0))
        print(",".join(header))
        for row in rows:
            print(",".join(str(v) for v in row))
    return 0


def cmd_jsi(args) -> int:
    channels = make_pump_channels(
        args.channels, args.width_nm, args.gap_nm, args.center_nm
    )
    grid = compute_jsi(
        channels, args.phasematch_fwhm_nm, grid_resolution=args.resolution
    )
    signal_bounds, idler_bounds = jsi_channel_bounds(channels)
    matrix = crosstalk_matrix(grid, signal_bounds, idler_bounds)
    lines = [_comment(args.seed or 0)]
    lines.append("signal_nm," + ",".join(str(v) for v in grid.idler_axis_nm))
    for i, lam in enumerate(grid.signal_axis_nm):
        lines.append(str(lam) + "," + ",".join(str(v) for v in grid.intensity[i]))
    Path(args.out).write_text("\n".join(lines) + "\n")
    off_diag = matrix[~np.eye(len(channels), dtype=bool)]
    print(f"channels: {len(channels)}, grid: {grid.intensity.shape}")
    print(f"max off-diagonal crosstalk: {off_diag.max():.2f} dB")
    for row in matrix:
        print(" ".join(f"{v:9.2f}" for v in row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnetsim",
        description="Entanglement-distribution network simulator and planner.",
    )
    parser.add_argument("--version", action="version", version=f"qnetsim {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def scenario_flags(p, with_out=True):
        p.add_argument("--config", help="scenario INI file (defaults to the stock satellite scenario)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--switch", choices=[s.value for s in SwitchPosition], help="override the switch position")
        p.add_argument("--format", choices=["csv"], default="csv", help="output format")
        if with_out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("simulate", help="run a scenario and record tags + metrics")
    scenario_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="recompute metrics from recorded tag files")
    p.add_argument("--in", dest="indir", required=True, help="directory written by simulate")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("plan", help="repetition-rate / channel-count trade-off curve")
    p.add_argument("--out", required=True, help="output CSV file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate-min-hz", type=float, default=1e6)
    p.add_argument("--rate-max-hz", type=float, default=5e8)
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--power-mw", type=float, default=0.1)
    p.add_argument("--signal-loss-db", type=float, default=30.0)
    p.add_argument("--idler-loss-db", type=float, default=0.0)
    p.add_argument("--jitter-ps", type=float, default=130.0)
    p.add_argument("--dead-time-ns", type=float, default=1000.0)
    p.add_argument("--dark-cps", type=float, default=1000.0)
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sweep", help="scan one scenario parameter")
    scenario_flags(p, with_out=False)
    p.add_argument("--out", required=True, help="output CSV file")
    p.add_argument("--parameter", default="source.pump_power_mw", help="dotted field path")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--reps", type=int, default=5, help="repetitions per value")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("topology", help="print connectivity and loss budgets")
    p.add_argument(
        "--switch",
        choices=[s.value for s in SwitchPosition] + ["merged"],
        default="top",
    )
    p.add_argument("--out", help="optional output CSV file (default: stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_topology)

    p = sub.add_parser("jsi", help="joint spectral intensity and cross-talk matrix")
    p.add_argument("--out", required=True, help="output CSV file for the intensity grid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--width-nm", type=float, default=0.25)
    p.add_argument("--gap-nm", type=float, default=0.25)
    p.add_argument("--center-nm", type=float, default=521.4)
    p.add_argument("--phasematch-fwhm-nm", type=float, default=0.05)
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_jsi)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
