"""Network connectivity under the three switch positions, and loss budgets.

The network serves four users (Alice, Bob, Charlie, Dana) from one
broadband pair source.  Four signal/idler channel pairs are carved out of
the downconversion spectrum; a fibre switch selects which connectivity
table is live.  The top position sends all signal channels to the
satellite uplink (satellite mode); the middle and bottom positions
redistribute them among ground users (ground mode).  Dana only ever
appears on a satellite link.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

__all__ = [
    "SwitchPosition",
    "NetworkMode",
    "ChannelPair",
    "Assignment",
    "Edge",
    "ConnectivityGraph",
    "LossBudget",
    "USERS",
    "SATELLITE",
    "PUMP_WAVELENGTH_NM",
    "SIGNAL_CENTERS_NM",
    "SIGNAL_BANDWIDTH_NM",
    "SIGNAL_WINDOW_NM",
    "idler_wavelength",
    "default_channel_pairs",
    "mode_for",
    "connectivity",
    "merged_ground_connectivity",
    "validate_allocation",
    "path_loss",
    "transport_loss_db",
]

USERS = ("alice", "bob", "charlie", "dana")
SATELLITE = "satellite"

PUMP_WAVELENGTH_NM = 521.4
# Grating centres of the signal-side demultiplexer; 4 nm pitch leaves a
# 1 nm guard band between adjacent 3 nm reflection bands.
SIGNAL_CENTERS_NM = (781.5, 785.5, 789.5, 793.5)
SIGNAL_BANDWIDTH_NM = 3.0
# Wavelength range accepted by the satellite uplink receiver.
SIGNAL_WINDOW_NM = (780.0, 795.0)


class SwitchPosition(enum.Enum):
    TOP = "top"
    MIDDLE = "middle"
    BOTTOM = "bottom"


class NetworkMode(enum.Enum):
    SATELLITE = "satellite"
    GROUND = "ground"


def mode_for(position: SwitchPosition) -> NetworkMode:
    """Top routes signals to the uplink; middle and bottom keep them on the ground."""
    if position is SwitchPosition.TOP:
        return NetworkMode.SATELLITE
    return NetworkMode.GROUND


def idler_wavelength(signal_nm: float, pump_nm: float = PUMP_WAVELENGTH_NM) -> float:
    """Idler wavelength paired with a signal by energy conservation.

    1/pump = 1/signal + 1/idler for a monochromatic pump.
    """
    inv = 1.0 / pump_nm - 1.0 / signal_nm
    if inv <= 0:
        raise ValueError("signal wavelength must exceed the pump wavelength")
    return 1.0 / inv


@dataclass(frozen=True)
class ChannelPair:
    """One correlated signal/idler channel pair."""

    index: int
    signal_nm: float
    idler_nm: float
    bandwidth_nm: float = SIGNAL_BANDWIDTH_NM

    def __post_init__(self) -> None:
        if not SIGNAL_WINDOW_NM[0] <= self.signal_nm <= SIGNAL_WINDOW_NM[1]:
            raise ValueError(
                f"signal centre {self.signal_nm} nm outside window {SIGNAL_WINDOW_NM}"
            )
        if self.idler_nm <= self.signal_nm:
            raise ValueError("idler must be the long-wavelength arm")
        if self.bandwidth_nm <= 0:
            raise ValueError("bandwidth_nm must be > 0")


def default_channel_pairs() -> tuple[ChannelPair, ...]:
    """The four channel pairs cut from the downconversion spectrum."""
    return tuple(
        ChannelPair(index=i, signal_nm=s, idler_nm=idler_wavelength(s))
        for i, s in enumerate(SIGNAL_CENTERS_NM)
    )


@dataclass(frozen=True)
class Assignment:
    """Who receives each arm of one channel pair on an edge."""

    pair: ChannelPair
    signal_to: str
    idler_to: str


@dataclass(frozen=True)
class Edge:
    """A usable link between two parties, possibly over several channel pairs."""

    node_a: str
    node_b: str
    assignments: tuple[Assignment, ...]

    def __post_init__(self) -> None:
        for a in self.assignments:
            for node in (a.signal_to, a.idler_to):
                if node not in (self.node_a, self.node_b):
                    raise ValueError(
                        f"assignment routes {node!r} outside edge {self.node_a}-{self.node_b}"
                    )


@dataclass(frozen=True)
class ConnectivityGraph:
    edges: tuple[Edge, ...]

    def nodes(self) -> tuple[str, ...]:
        seen: list[str] = []
        for e in self.edges:
            for n in (e.node_a, e.node_b):
                if n not in seen:
                    seen.append(n)
        return tuple(seen)


def _edge(node_a: str, node_b: str, *pairs: tuple[int, str, str]) -> Edge:
    table = default_channel_pairs()
    return Edge(
        node_a,
        node_b,
        tuple(Assignment(table[i], signal_to, idler_to) for i, signal_to, idler_to in pairs),
    )


def connectivity(position: SwitchPosition) -> ConnectivityGraph:
    """Connectivity table for one switch position.

    Top: every user shares a pair with the satellite (signal up, idler
    kept on the ground).  Middle: Alice-Charlie over pairs 1 and 3,
    Bob-Charlie over pair 2.  Bottom: Alice-Bob over pairs 1 and 2,
    Bob-Charlie over pair 3.  Within each two-pair edge the partners hold
    opposite arms of the two pairs, so each party gets one signal and one
    idler wavelength.
    """
    if position is SwitchPosition.TOP:
        return ConnectivityGraph(
            tuple(
                _edge(user, SATELLITE, (i, SATELLITE, user))
                for i, user in enumerate(USERS)
            )
        )
    if position is SwitchPosition.MIDDLE:
        return ConnectivityGraph(
            (
                _edge("alice", "charlie", (0, "charlie", "alice"), (2, "alice", "charlie")),
                _edge("bob", "charlie", (1, "charlie", "bob")),
            )
        )
    if position is SwitchPosition.BOTTOM:
        return ConnectivityGraph(
            (
                _edge("alice", "bob", (0, "bob", "alice"), (1, "alice", "bob")),
                _edge("bob", "charlie", (2, "bob", "charlie")),
            )
        )
    raise ValueError(f"unknown switch position {position!r}")


def merged_ground_connectivity() -> ConnectivityGraph:
    """Union of both ground tables, as with a passive circulator demux.

    The middle and bottom graphs then operate simultaneously; together they
    connect every pair among Alice, Bob and Charlie.
    """
    middle = connectivity(SwitchPosition.MIDDLE)
    bottom = connectivity(SwitchPosition.BOTTOM)
    return ConnectivityGraph(middle.edges + bottom.edges)


def validate_allocation(
    graph: ConnectivityGraph, min_guard_nm: float = 1.0
) -> list[str]:
    """Check a graph's wavelength plan; returns a list of violation strings.

    Three classes of violation: the same wavelength assigned to more than
    one edge, adjacent signal bands closer than the guard band, and channel
    pairs that do not share a common pump (energy conservation).
    """
    violations: list[str] = []

    used: dict[tuple[int, str], str] = {}
    for e in graph.edges:
        label = f"{e.node_a}-{e.node_b}"
        for a in e.assignments:
            for kind in ("signal", "idler"):
                key = (a.pair.index, kind)
                if key in used and used[key] != label:
                    violations.append(
                        f"channel {a.pair.index} {kind} reused on {used[key]} and {label}"
                    )
                used.setdefault(key, label)

    bands = sorted(
        {(a.pair.signal_nm, a.pair.bandwidth_nm) for e in graph.edges for a in e.assignments}
    )
    for (c1, w1), (c2, w2) in zip(bands, bands[1:]):
        gap = (c2 - w2 / 2.0) - (c1 + w1 / 2.0)
        if gap < min_guard_nm - 1e-9:
            violations.append(
                f"signal bands at {c1} and {c2} nm leave a {gap:.3f} nm gap "
                f"(< {min_guard_nm} nm guard)"
            )

    pumps = {
        round(1.0 / a.pair.signal_nm + 1.0 / a.pair.idler_nm, 12)
        for e in graph.edges
        for a in e.assignments
    }
    if len(pumps) > 1:
        violations.append("channel pairs imply more than one pump wavelength")

    return violations


@dataclass(frozen=True)
class LossBudget:
    """Itemized dB budget of one optical path."""

    components: tuple[tuple[str, float], ...]

    @property
    def total_db(self) -> float:
        return sum(v for _, v in self.components)


# Measured insertion losses of the idler wavelength demultiplexer, per
# output port, and the common source-side contribution ahead of it.
_IDLER_DEMUX_DB = {"alice": 4.9, "bob": 7.7, "charlie": 10.5, "dana": 8.5}
_WAVEGUIDE_AND_BRIDGE_IDLER_DB = 8.0  # chip out-coupling + free-space bridge

# Signal-side satellite path pieces.
_WAVEGUIDE_COUPLING_DB = 4.5
_BRIDGE_SIGNAL_DB = 7.96  # free-space bridge is lossier for the short arm
_FTM_CIRCULATOR_DB = 3.0
_FTM_ARRAY_DB = 7.0
_DETECTOR_FIBER_DB = 1.3  # patch fibre and connectors to the Si APD
_SI_APD_DETECTION_DB = 2.2184874961635637  # -10 log10(0.60)

# Ground-mode extras.
_WDM_1550_DB = 0.97
_WDM_780_DB = 3.02
_SIGNAL_FBG_DB = 1.5


def _satellite_signal_budget() -> LossBudget:
    return LossBudget(
        (
            ("waveguide coupling", _WAVEGUIDE_COUPLING_DB),
            ("free-space bridge", _BRIDGE_SIGNAL_DB),
            ("ftm circulator", _FTM_CIRCULATOR_DB),
            ("ftm grating array", _FTM_ARRAY_DB),
            ("detector fibre patch", _DETECTOR_FIBER_DB),
            ("detection (si apd)", _SI_APD_DETECTION_DB),
        )
    )


def _idler_arm_budget(user: str, ground: bool) -> LossBudget:
    parts = [
        ("waveguide + bridge", _WAVEGUIDE_AND_BRIDGE_IDLER_DB),
        ("idler demux port", _IDLER_DEMUX_DB[user]),
    ]
    if ground:
        parts.append(("wdm insertion (1550)", _WDM_1550_DB))
    return LossBudget(tuple(parts))


def _ground_signal_budget() -> LossBudget:
    return LossBudget(
        (
            ("waveguide coupling", _WAVEGUIDE_COUPLING_DB),
            ("free-space bridge", _BRIDGE_SIGNAL_DB),
            ("signal grating", _SIGNAL_FBG_DB),
            ("wdm insertion (780)", _WDM_780_DB),
        )
    )


def path_loss(identifier: str, mode: NetworkMode) -> LossBudget:
    """Itemized loss budget of one path in the given mode.

    Satellite mode accepts the four user names (their idler arms) and
    "signal" (the common uplink arm through the FTM, including detection).
    Ground mode accepts "<user>.idler" and "<user>.signal" for Alice, Bob
    and Charlie; a bare user name means the idler arm.  Unknown names raise
    KeyError.
    """
    name = identifier.strip().lower()
    if mode is NetworkMode.SATELLITE:
        if name == "signal":
            return _satellite_signal_budget()
        if name in USERS:
            return _idler_arm_budget(name, ground=False)
        raise KeyError(f"unknown satellite-mode path {identifier!r}")

    base, _, arm = name.partition(".")
    arm = arm or "idler"
    if base not in ("alice", "bob", "charlie"):
        raise KeyError(f"unknown ground-mode node {identifier!r}")
    if arm == "idler":
        return _idler_arm_budget(base, ground=True)
    if arm == "signal":
        return _ground_signal_budget()
    raise KeyError(f"unknown ground-mode arm {identifier!r}")


def transport_loss_db(identifier: str, mode: NetworkMode) -> float:
    """Path loss excluding detection terms, for use ahead of a detector model.

    Detector quantum efficiency belongs to the detector, not the fibre;
    this strips any "detection" component so that budgets and detector
    efficiency maps can be combined without double counting.
    """
    budget = path_loss(identifier, mode)
    return sum(v for name, v in budget.components if not name.startswith("detection"))
