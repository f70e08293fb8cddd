"""End-to-end scenario runner: source -> paths -> detectors -> link metrics.

A scenario fixes the switch position, the pump, the per-path channel
overrides, and the detectors, then produces time-tag streams (one per
physical detector) and per-link CAR/key-rate records.  Simulation and
analysis are split so that recorded tag files can be re-analyzed and
reproduce the simulate-time metrics bit for bit.

Satellite mode uses one shared signal detector behind the time demux and
one detector per user on the idler side; ground modes terminate both of
a user's fiber arms on a single dual-band detector, so pair peaks are
separated from the zero-delay pileup by the idler path delay.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .coincidence import (
    CarResult,
    CoincidenceHistogram,
    car_from_tags,
    combine_car,
    demux_time_slots,
    histogram,
)
from .detection import Clicks, DetectorSpec, detect, si_apd, snspd
from .metrics import MetricsRecord, QkdParams, metrics_from_car
from .source import SourceSpec, sample_pairs, to_photons
from .topology import (
    USERS,
    Edge,
    NetworkMode,
    SwitchPosition,
    connectivity,
    default_channel_pairs,
    merged_ground_connectivity,
    mode_for,
    transport_loss_db,
)
from .transport import ChannelSpec, FtmSpec, PhotonBatch, concat_photons, ftm_delay, propagate

__all__ = [
    "ScenarioConfig",
    "SweepSpec",
    "SweepRow",
    "ConfigError",
    "default_scenario",
    "validate_config",
    "simulate_tags",
    "analyze_tags",
    "run_scenario",
    "link_histograms",
    "sweep",
    "derive_seed",
    "parse_config",
    "config_to_dict",
    "write_config_ini",
    "qnet_threads",
]

# Per-detector timing jitter giving a 130 ps two-detector quadrature sum.
DEFAULT_JITTER_PS = 130.0 / math.sqrt(2.0)

_DEFAULT_IDLER_DELAY_PS = 5000.0


class ConfigError(ValueError):
    """Raised when a scenario description fails validation."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulation run."""

    source: SourceSpec = field(default_factory=SourceSpec)
    position: SwitchPosition = SwitchPosition.TOP
    merged_ground: bool = False
    active_channels: tuple[int, ...] | None = None
    detectors: Mapping[str, DetectorSpec] = field(default_factory=dict)
    channels: Mapping[str, ChannelSpec] = field(default_factory=dict)
    ftm: FtmSpec = field(default_factory=FtmSpec)
    duration_s: float = 0.25
    master_seed: int = 12345
    window_ps: int = 500
    n_unmatched_slots: int = 4
    slot_window_ps: float = 1000.0
    qkd: QkdParams = field(default_factory=QkdParams)

    @property
    def mode(self) -> NetworkMode:
        return mode_for(self.position)

    @property
    def n_pulses(self) -> int:
        return int(round(self.duration_s * self.source.rep_rate_hz))

    def resolved_active(self) -> tuple[int, ...]:
        """Active channel set, defaulting to every source channel."""
        if self.active_channels is not None:
            return tuple(sorted(set(self.active_channels)))
        return tuple(range(self.source.n_channels))


def default_scenario() -> ScenarioConfig:
    """Satellite downlink with three multiplexed channels.

    Three of the four source channels keep the grating comb inside one
    80 MHz pulse period; the fourth slot would alias into the next pulse.
    """
    return ScenarioConfig(active_channels=(0, 1, 2))


def derive_seed(master_seed: int, *parts: object) -> int:
    """Derive a decorrelated 64-bit stream seed from a master seed.

    Integer parts advance a splitmix64 chain; string parts are folded in
    through blake2b, so ("det", "alice") and ("det", "bob") never collide.
    """
    state = master_seed & 0xFFFFFFFFFFFFFFFF
    for part in parts:
        if isinstance(part, str):
            digest = hashlib.blake2b(part.encode(), digest_size=8).digest()
            state ^= int.from_bytes(digest, "little")
        elif isinstance(part, (int, np.integer)):
            state ^= int(part) & 0xFFFFFFFFFFFFFFFF
        else:
            raise TypeError(f"seed parts must be int or str, got {type(part).__name__}")
        # splitmix64 finalizer
        state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        state = z ^ (z >> 31)
    return state


def qnet_threads() -> int:
    """Worker count for sweeps, overridable via QNET_THREADS."""
    raw = os.environ.get("QNET_THREADS", "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError as exc:
            raise ConfigError(f"QNET_THREADS must be an integer, got {raw!r}") from exc
        if value < 1:
            raise ConfigError("QNET_THREADS must be >= 1")
        return value
    return max(1, min(8, os.cpu_count() or 1))


# -- detector and path resolution -------------------------------------------


def _default_detector(node: str) -> DetectorSpec:
    """Stock detector for a node: silicon behind the demux, SNSPD for users."""
    if node == "signal":
        return si_apd(name="signal", jitter_ps=DEFAULT_JITTER_PS, dark_rate_cps=250.0)
    return snspd(name=node, jitter_ps=DEFAULT_JITTER_PS, dark_rate_cps=100.0)


def _detector(cfg: ScenarioConfig, node: str) -> DetectorSpec:
    spec = cfg.detectors.get(node)
    if spec is None:
        return _default_detector(node)
    if spec.name != node:
        spec = dataclasses.replace(spec, name=node)
    return spec


def _path_spec(cfg: ScenarioConfig, identifier: str) -> ChannelSpec:
    """Channel for a loss-budget path id, with scenario overrides applied.

    The demux pitch on the satellite signal path always comes from the
    scenario's grating array, so simulation and slot analysis agree even
    when the path is overridden.
    """
    override = cfg.channels.get(identifier)
    if cfg.mode is NetworkMode.SATELLITE and identifier == "signal":
        base = (
            override
            if override is not None
            else ChannelSpec(loss_db=transport_loss_db(identifier, cfg.mode))
        )
        return dataclasses.replace(base, ftm_delay_ps=ftm_delay(1, cfg.ftm))
    if override is not None:
        return override
    loss = transport_loss_db(identifier, cfg.mode)
    if identifier.endswith(".signal"):
        return ChannelSpec(loss_db=loss)
    return ChannelSpec(loss_db=loss, propagation_delay_ps=_DEFAULT_IDLER_DELAY_PS)


def _subset(batch: PhotonBatch, mask: np.ndarray) -> PhotonBatch:
    return PhotonBatch(
        time_ps=batch.time_ps[mask],
        wavelength_nm=batch.wavelength_nm[mask],
        channel=batch.channel[mask],
        truth_channel=batch.truth_channel[mask],
    )


def _ground_edges(cfg: ScenarioConfig) -> tuple[Edge, ...]:
    if cfg.merged_ground:
        return merged_ground_connectivity().edges
    return connectivity(cfg.position).edges


# -- validation ---------------------------------------------------------------


def validate_config(cfg: ScenarioConfig) -> list[str]:
    """Collect human-readable problems; an empty list means runnable."""
    problems: list[str] = []
    if cfg.duration_s <= 0:
        problems.append("run.duration_s: must be > 0")
    if not 0 <= cfg.master_seed < 2**64:
        problems.append("run.master_seed: must fit in 64 bits")
    period = cfg.source.pulse_period_ps
    if cfg.window_ps <= 0 or cfg.window_ps > period // 2:
        problems.append(
            f"run.window_ps: must lie in (0, {period // 2}] for a "
            f"{period} ps pulse period"
        )
    if cfg.n_unmatched_slots < 1:
        problems.append("run.n_unmatched_slots: must be >= 1")
    if cfg.merged_ground and cfg.mode is not NetworkMode.GROUND:
        problems.append("network.merged_ground: requires a ground switch position")

    n_pairs = len(default_channel_pairs())
    if cfg.source.n_channels > n_pairs:
        problems.append(
            f"source.n_channels: only {n_pairs} wavelength pairs are defined"
        )
    active = cfg.resolved_active()
    if not active:
        problems.append("network.active_channels: must not be empty")
    elif active[0] < 0 or active[-1] >= cfg.source.n_channels:
        problems.append(
            f"network.active_channels: indices must lie in "
            f"[0, {cfg.source.n_channels - 1}]"
        )
    elif cfg.mode is NetworkMode.SATELLITE:
        pitch = ftm_delay(1, cfg.ftm)
        n_slots = active[-1] + 1
        if cfg.slot_window_ps <= 0:
            problems.append("run.slot_window_ps: must be > 0")
        elif n_slots * pitch > period + 1e-9:
            problems.append(
                f"network.active_channels: {n_slots} grating slots of "
                f"{pitch:.1f} ps overrun the {period} ps pulse period"
            )

    known_paths = _known_path_ids(cfg)
    for key in cfg.channels:
        if key not in known_paths:
            problems.append(f"channels.{key}: unknown path for this switch position")
    known_nodes = _known_detector_nodes(cfg)
    for key in cfg.detectors:
        if key not in known_nodes:
            problems.append(f"detectors.{key}: unknown node for this switch position")
    return problems


def _known_path_ids(cfg: ScenarioConfig) -> set[str]:
    if cfg.mode is NetworkMode.SATELLITE:
        return {"signal", *USERS}
    ids: set[str] = set()
    for edge in _ground_edges(cfg):
        for assignment in edge.assignments:
            ids.add(f"{assignment.idler_to}.idler")
            ids.add(f"{assignment.signal_to}.signal")
    return ids


def _known_detector_nodes(cfg: ScenarioConfig) -> set[str]:
    if cfg.mode is NetworkMode.SATELLITE:
        return {"signal", *USERS}
    nodes: set[str] = set()
    for edge in _ground_edges(cfg):
        nodes.update((edge.node_a, edge.node_b))
    return nodes


# -- simulation ---------------------------------------------------------------


def simulate_tags(cfg: ScenarioConfig) -> dict[str, Clicks]:
    """Generate pairs, route them through the network, detect them.

    Returns one click stream per physical detector, keyed by node name.
    """
    problems = validate_config(cfg)
    if problems:
        raise ConfigError("; ".join(problems))

    n_pulses = cfg.n_pulses
    duration_ps = n_pulses * cfg.source.pulse_period_ps
    active = cfg.resolved_active()
    pairs = sample_pairs(
        cfg.source, n_pulses, derive_seed(cfg.master_seed, "pairs"), active
    )
    signal, idler = to_photons(pairs)

    if cfg.mode is NetworkMode.SATELLITE:
        return _simulate_satellite(cfg, signal, idler, active, duration_ps)
    return _simulate_ground(cfg, signal, idler, active, duration_ps)


def _simulate_satellite(
    cfg: ScenarioConfig,
    signal: PhotonBatch,
    idler: PhotonBatch,
    active: tuple[int, ...],
    duration_ps: int,
) -> dict[str, Clicks]:
    streams: dict[str, Clicks] = {}
    sent = propagate(
        signal, _path_spec(cfg, "signal"), derive_seed(cfg.master_seed, "prop", "signal")
    )
    streams["signal"] = detect(
        sent,
        _detector(cfg, "signal"),
        duration_ps,
        derive_seed(cfg.master_seed, "det", "signal"),
    )
    for channel in active:
        user = USERS[channel]
        # routing by demux exit port, so crosstalk hops land at the neighbor
        arm = _subset(idler, idler.channel == channel)
        sent = propagate(
            arm, _path_spec(cfg, user), derive_seed(cfg.master_seed, "prop", user)
        )
        streams[user] = detect(
            sent,
            _detector(cfg, user),
            duration_ps,
            derive_seed(cfg.master_seed, "det", user),
        )
    return streams


def _simulate_ground(
    cfg: ScenarioConfig,
    signal: PhotonBatch,
    idler: PhotonBatch,
    active: tuple[int, ...],
    duration_ps: int,
) -> dict[str, Clicks]:
    # Claims: (arm, pair index) -> receiving users.  Merged graphs may route
    # one arm to two users; those photons split over a passive coupler.
    claims: dict[tuple[str, int], list[str]] = {}
    for edge in _ground_edges(cfg):
        for assignment in edge.assignments:
            pair = assignment.pair.index
            if pair not in active:
                continue
            for kind, user in (("signal", assignment.signal_to), ("idler", assignment.idler_to)):
                users = claims.setdefault((kind, pair), [])
                if user not in users:
                    users.append(user)

    per_user: dict[str, list[PhotonBatch]] = {}
    for (kind, pair), users in sorted(claims.items()):
        source_batch = signal if kind == "signal" else idler
        arm = _subset(source_batch, source_batch.channel == pair)
        if len(users) == 1:
            shares = [arm]
        else:
            rng = np.random.default_rng(
                derive_seed(cfg.master_seed, "split", kind, pair)
            )
            pick = rng.integers(0, len(users), size=len(arm))
            shares = [_subset(arm, pick == j) for j in range(len(users))]
        for user, share in zip(users, shares):
            path = f"{user}.{kind}"
            sent = propagate(
                share,
                _path_spec(cfg, path),
                derive_seed(cfg.master_seed, "prop", path, pair),
            )
            per_user.setdefault(user, []).append(sent)

    streams: dict[str, Clicks] = {}
    for user in sorted(per_user):
        merged = concat_photons(per_user[user])
        streams[user] = detect(
            merged,
            _detector(cfg, user),
            duration_ps,
            derive_seed(cfg.master_seed, "det", user),
        )
    return streams


# -- analysis -----------------------------------------------------------------


def analyze_tags(
    cfg: ScenarioConfig, streams: Mapping[str, Clicks]
) -> dict[str, tuple[CarResult, MetricsRecord]]:
    """Compute per-link CAR and QKD metrics from recorded click streams.

    Depends only on the scenario description and the tags, so re-running
    it on streams read back from disk reproduces simulate-time results.
    """
    problems = validate_config(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    if cfg.mode is NetworkMode.SATELLITE:
        return _analyze_satellite(cfg, streams)
    return _analyze_ground(cfg, streams)


def _link_metrics(cfg: ScenarioConfig, car: CarResult, matched_total: int) -> MetricsRecord:
    gain = matched_total / max(cfg.n_pulses, 1)
    return metrics_from_car(
        car.car, car.car_error, gain, cfg.source.rep_rate_hz, cfg.qkd
    )


def _analyze_satellite(
    cfg: ScenarioConfig, streams: Mapping[str, Clicks]
) -> dict[str, tuple[CarResult, MetricsRecord]]:
    if "signal" not in streams:
        raise ConfigError("streams: missing the shared 'signal' detector")
    active = cfg.resolved_active()
    period = cfg.source.pulse_period_ps
    pitch = ftm_delay(1, cfg.ftm)
    sig_spec = _path_spec(cfg, "signal")

    slot_origin = sig_spec.propagation_delay_ps - cfg.slot_window_ps / 2.0
    slots = demux_time_slots(
        streams["signal"].time_ps,
        slot_origin,
        pitch,
        active[-1] + 1,
        cfg.slot_window_ps,
        period,
    )

    results: dict[str, tuple[CarResult, MetricsRecord]] = {}
    for channel in active:
        user = USERS[channel]
        if user not in streams:
            raise ConfigError(f"streams: missing detector '{user}'")
        offset = _path_spec(cfg, user).propagation_delay_ps - sig_spec.propagation_delay_ps
        car = car_from_tags(
            slots[channel],
            streams[user].time_ps,
            period,
            cfg.window_ps,
            expected_offset_ps=offset,
            n_unmatched_slots=cfg.n_unmatched_slots,
        )
        results[f"{user}-satellite"] = (car, _link_metrics(cfg, car, car.matched_counts))
    return results


def _analyze_ground(
    cfg: ScenarioConfig, streams: Mapping[str, Clicks]
) -> dict[str, tuple[CarResult, MetricsRecord]]:
    active = cfg.resolved_active()
    period = cfg.source.pulse_period_ps
    by_link: dict[str, list[CarResult]] = {}
    for edge in _ground_edges(cfg):
        measurements: list[CarResult] = []
        for assignment in edge.assignments:
            if assignment.pair.index not in active:
                continue
            sig_user, idl_user = assignment.signal_to, assignment.idler_to
            for user in (sig_user, idl_user):
                if user not in streams:
                    raise ConfigError(f"streams: missing detector '{user}'")
            offset = (
                _path_spec(cfg, f"{idl_user}.idler").propagation_delay_ps
                - _path_spec(cfg, f"{sig_user}.signal").propagation_delay_ps
            )
            measurements.append(
                car_from_tags(
                    streams[sig_user].time_ps,
                    streams[idl_user].time_ps,
                    period,
                    cfg.window_ps,
                    expected_offset_ps=offset,
                    n_unmatched_slots=cfg.n_unmatched_slots,
                )
            )
        if measurements:
            link = f"{edge.node_a}-{edge.node_b}"
            by_link.setdefault(link, []).extend(measurements)

    results: dict[str, tuple[CarResult, MetricsRecord]] = {}
    for link, cars in by_link.items():
        combined = combine_car(cars) if len(cars) > 1 else cars[0]
        results[link] = (
            combined,
            _link_metrics(cfg, combined, combined.matched_counts),
        )
    return results


def run_scenario(cfg: ScenarioConfig) -> dict[str, tuple[CarResult, MetricsRecord]]:
    """Simulate a scenario and analyze it in one step."""
    return analyze_tags(cfg, simulate_tags(cfg))


def link_histograms(
    cfg: ScenarioConfig,
    streams: Mapping[str, Clicks],
    bin_width_ps: float = 100.0,
    span_periods: float = 2.2,
) -> dict[str, CoincidenceHistogram]:
    """Per-link delay histograms, centered on each link's pair peak.

    Covers a couple of pulse periods either side so the accidental comb
    is visible next to the matched peak.
    """
    period = cfg.source.pulse_period_ps
    span = span_periods * period
    out: dict[str, CoincidenceHistogram] = {}
    if cfg.mode is NetworkMode.SATELLITE:
        active = cfg.resolved_active()
        sig_spec = _path_spec(cfg, "signal")
        slots = demux_time_slots(
            streams["signal"].time_ps,
            sig_spec.propagation_delay_ps - cfg.slot_window_ps / 2.0,
            ftm_delay(1, cfg.ftm),
            active[-1] + 1,
            cfg.slot_window_ps,
            period,
        )
        for channel in active:
            user = USERS[channel]
            offset = (
                _path_spec(cfg, user).propagation_delay_ps
                - sig_spec.propagation_delay_ps
            )
            out[f"{user}-satellite"] = histogram(
                slots[channel], streams[user].time_ps, bin_width_ps, span, center_ps=offset
            )
        return out
    for edge in _ground_edges(cfg):
        live = [a for a in edge.assignments if a.pair.index in cfg.resolved_active()]
        link = f"{edge.node_a}-{edge.node_b}"
        if not live or link in out:
            continue
        first = live[0]
        offset = (
            _path_spec(cfg, f"{first.idler_to}.idler").propagation_delay_ps
            - _path_spec(cfg, f"{first.signal_to}.signal").propagation_delay_ps
        )
        out[link] = histogram(
            streams[first.signal_to].time_ps,
            streams[first.idler_to].time_ps,
            bin_width_ps,
            span,
            center_ps=offset,
        )
    return out


# -- parameter sweeps ---------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """A one-parameter scan: dotted field path, values, repeats per value."""

    parameter: str
    values: tuple
    repetitions: int = 5

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("values must not be empty")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


@dataclass(frozen=True)
class SweepRow:
    """One (value, repetition, link) cell of a sweep result."""

    parameter: str
    value: object
    repetition: int
    link: str
    car: CarResult
    metrics: MetricsRecord
    pump_power_mw: float
    n_channels: int


def _apply_parameter(cfg: ScenarioConfig, path: str, value: object) -> ScenarioConfig:
    section, _, fieldname = path.partition(".")
    if section == "source" and fieldname in {f.name for f in dataclasses.fields(SourceSpec)}:
        return dataclasses.replace(cfg, source=dataclasses.replace(cfg.source, **{fieldname: value}))
    if section == "run" and fieldname in {"duration_s", "window_ps", "n_unmatched_slots", "slot_window_ps"}:
        return dataclasses.replace(cfg, **{fieldname: value})
    if section == "network" and fieldname == "active_channels":
        return dataclasses.replace(cfg, active_channels=tuple(value))
    raise ConfigError(f"unknown sweep parameter {path!r}")


def sweep(cfg: ScenarioConfig, spec: SweepSpec) -> list[SweepRow]:
    """Run a scan over one parameter with fresh seeds per repetition.

    Cells run on a thread pool (size from QNET_THREADS); row order is
    deterministic regardless of scheduling.
    """
    cells = []
    for i, value in enumerate(spec.values):
        base = _apply_parameter(cfg, spec.parameter, value)
        for rep in range(spec.repetitions):
            seed = derive_seed(cfg.master_seed, "sweep", spec.parameter, i, rep)
            cells.append((value, rep, dataclasses.replace(base, master_seed=seed)))

    def run(cell):
        value, rep, cell_cfg = cell
        rows = []
        for link, (car, metrics) in sorted(run_scenario(cell_cfg).items()):
            rows.append(
                SweepRow(
                    parameter=spec.parameter,
                    value=value,
                    repetition=rep,
                    link=link,
                    car=car,
                    metrics=metrics,
                    pump_power_mw=cell_cfg.source.pump_power_mw,
                    n_channels=len(cell_cfg.resolved_active()),
                )
            )
        return rows

    with ThreadPoolExecutor(max_workers=qnet_threads()) as pool:
        nested = list(pool.map(run, cells))
    return [row for rows in nested for row in rows]


# -- INI configuration --------------------------------------------------------

_RUN_FIELDS = {
    "duration_s": float,
    "master_seed": int,
    "window_ps": int,
    "n_unmatched_slots": int,
    "slot_window_ps": float,
}

_SOURCE_FIELDS = {
    "brightness_pairs_per_s_per_mw": float,
    "pump_power_mw": float,
    "rep_rate_hz": float,
    "n_channels": int,
    "signal_center_nm": float,
    "idler_center_nm": float,
    "crosstalk_db": float,
}

_DETECTOR_FIELDS = {
    "jitter_ps": float,
    "dark_rate_cps": float,
    "dead_time_ns": float,
}

_CHANNEL_FIELDS = {
    "loss_db": float,
    "propagation_delay_ps": float,
    "extra_jitter_ps": float,
    "ftm_delay_ps": float,
}

_POSITIONS = {p.value: p for p in SwitchPosition}


def parse_config(text: str) -> ScenarioConfig:
    """Build a scenario from INI text; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    problems: list[str] = []
    kwargs: dict = {}
    source_kwargs: dict = {}
    detectors: dict[str, DetectorSpec] = {}
    channels: dict[str, ChannelSpec] = {}

    for section in parser.sections():
        items = dict(parser.items(section))
        if section == "source":
            source_kwargs.update(
                _typed_items(items, _SOURCE_FIELDS, section, problems)
            )
        elif section == "network":
            _parse_network(items, kwargs, problems)
        elif section == "run":
            kwargs.update(_typed_items(items, _RUN_FIELDS, section, problems))
        elif section.startswith("detectors."):
            name = section.split(".", 1)[1]
            spec = _parse_detector(name, items, section, problems)
            if spec is not None:
                detectors[name] = spec
        elif section.startswith("channels."):
            path = section.split(".", 1)[1]
            channels[path] = ChannelSpec(
                **_typed_items(items, _CHANNEL_FIELDS, section, problems)
            )
        else:
            problems.append(f"{section}: unknown section")

    if problems:
        raise ConfigError("; ".join(problems))
    try:
        source = SourceSpec(**source_kwargs)
        return ScenarioConfig(
            source=source, detectors=detectors, channels=channels, **kwargs
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _typed_items(items, schema, section, problems) -> dict:
    out = {}
    for key, raw in items.items():
        if key not in schema:
            problems.append(f"{section}.{key}: unknown key")
            continue
        try:
            out[key] = schema[key](raw)
        except ValueError:
            problems.append(f"{section}.{key}: cannot parse {raw!r}")
    return out


def _parse_network(items, kwargs, problems) -> None:
    for key, raw in items.items():
        if key == "switch":
            if raw not in _POSITIONS:
                problems.append(
                    f"network.switch: expected one of {sorted(_POSITIONS)}, got {raw!r}"
                )
            else:
                kwargs["position"] = _POSITIONS[raw]
        elif key == "merged_ground":
            kwargs["merged_ground"] = raw.strip().lower() in ("1", "true", "yes", "on")
        elif key == "active_channels":
            if raw.strip().lower() == "all":
                kwargs["active_channels"] = None
            else:
                try:
                    kwargs["active_channels"] = tuple(
                        int(tok) for tok in raw.replace(",", " ").split()
                    )
                except ValueError:
                    problems.append(f"network.active_channels: cannot parse {raw!r}")
        else:
            problems.append(f"network.{key}: unknown key")


def _parse_detector(name, items, section, problems) -> DetectorSpec | None:
    kind = items.pop("type", "snspd")
    factory = {"si-apd": si_apd, "snspd": snspd}.get(kind)
    if factory is None:
        problems.append(f"{section}.type: expected si-apd or snspd, got {kind!r}")
        return None
    overrides = _typed_items(items, _DETECTOR_FIELDS, section, problems)
    return factory(name=name, **overrides)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """JSON-ready view of a scenario, used for run manifests."""
    return {
        "source": dataclasses.asdict(cfg.source),
        "network": {
            "switch": cfg.position.value,
            "merged_ground": cfg.merged_ground,
            "active_channels": list(cfg.resolved_active()),
            "ftm": dataclasses.asdict(cfg.ftm),
        },
        "detectors": {
            name: dataclasses.asdict(spec) for name, spec in sorted(cfg.detectors.items())
        },
        "channels": {
            path: dataclasses.asdict(spec) for path, spec in sorted(cfg.channels.items())
        },
        "run": {
            "duration_s": cfg.duration_s,
            "master_seed": cfg.master_seed,
            "window_ps": cfg.window_ps,
            "n_unmatched_slots": cfg.n_unmatched_slots,
            "slot_window_ps": cfg.slot_window_ps,
        },
    }


def write_config_ini(cfg: ScenarioConfig) -> str:
    """Render a scenario back to INI text (round-trips through parse_config)."""
    parser = configparser.ConfigParser(interpolation=None)
    data = config_to_dict(cfg)
    parser["source"] = {
        k: repr(v) if not isinstance(v, str) else v
        for k, v in data["source"].items()
        if v is not None
    }
    parser["network"] = {
        "switch": cfg.position.value,
        "merged_ground": str(cfg.merged_ground).lower(),
        "active_channels": ",".join(str(c) for c in cfg.resolved_active()),
    }
    parser["run"] = {k: repr(v) for k, v in data["run"].items()}
    for name, spec in sorted(cfg.detectors.items()):
        kind = (
            "snspd"
            if any(lo <= 1550.0 <= hi for lo, hi, _ in spec.efficiency_by_band)
            else "si-apd"
        )
        parser[f"detectors.{name}"] = {
            "type": kind,
            "jitter_ps": repr(spec.jitter_ps),
            "dark_rate_cps": repr(spec.dark_rate_cps),
            "dead_time_ns": repr(spec.dead_time_ns),
        }
    for path, spec in sorted(cfg.channels.items()):
        parser[f"channels.{path}"] = {
            "loss_db": repr(spec.loss_db),
            "propagation_delay_ps": repr(spec.propagation_delay_ps),
            "extra_jitter_ps": repr(spec.extra_jitter_ps),
            "ftm_delay_ps": repr(spec.ftm_delay_ps),
        }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
