"""Capacity planning for frequency-time multiplexed links.

Three bounds shape a link plan: the timing-jitter bound on how many
temporal slots fit in one pulse period, the spectral budget of the
receiver window, and detector saturation.  optimize_rep_rate ties them
together into the repetition-rate trade-off; flexgrid_allocate splits a
channel budget among users.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .coincidence import pulse_statistics
from .detection import DetectorSpec, saturated_rate
from .source import SourceSpec
from .topology import SIGNAL_WINDOW_NM
from .transport import SPEED_OF_LIGHT_M_PER_S, db_to_transmittance

__all__ = [
    "TradeoffPoint",
    "GridAllocation",
    "max_time_channels",
    "spectral_channels",
    "optimize_rep_rate",
    "flexgrid_allocate",
]


@dataclass(frozen=True)
class TradeoffPoint:
    """One evaluated grid point of the rate-versus-channels trade-off."""

    rep_rate_hz: float
    n_channels: int
    per_channel_rate: float
    total_rate: float

    def __post_init__(self) -> None:
        if self.rep_rate_hz <= 0:
            raise ValueError("rep_rate_hz must be > 0")
        if self.n_channels < 0:
            raise ValueError("n_channels must be >= 0")
        if self.per_channel_rate < 0 or self.total_rate < 0:
            raise ValueError("rates must be >= 0")


@dataclass(frozen=True)
class GridAllocation:
    """Flex-grid channel plan: channel comb plus a user -> channels map."""

    channels: tuple[tuple[float, float], ...]  # (center THz, width GHz)
    guard_ghz: float
    assignment: dict[int, tuple[int, ...]]


def max_time_channels(
    rep_rate_hz: float, jitter_ps: float, slots_per_channel: float = 1.0
) -> int:
    """How many temporal channels one pulse period can hold.

    The bare bound is 1/(R * jitter); slots_per_channel widens each slot
    by a guard multiplier (1 reproduces the bare bound).
    """
    if rep_rate_hz <= 0 or jitter_ps <= 0:
        raise ValueError("rep_rate_hz and jitter_ps must be > 0")
    if slots_per_channel < 1:
        raise ValueError("slots_per_channel must be >= 1")
    return math.floor(1.0 / (rep_rate_hz * jitter_ps * 1e-12 * slots_per_channel))


def spectral_channels(window_nm: tuple[float, float], spacing_ghz: float) -> int:
    """Channel count of a wavelength window at uniform frequency spacing.

    Computed from the exact frequency endpoints rather than the small
    bandwidth approximation c*d_lambda/lambda^2, so wide windows do not
    accumulate rounding ambiguity.
    """
    lo, hi = window_nm
    if not lo < hi:
        raise ValueError("window must be an increasing (lo, hi) pair")
    if lo <= 0:
        raise ValueError("window wavelengths must be > 0")
    if spacing_ghz <= 0:
        raise ValueError("spacing_ghz must be > 0")
    c_nm_ghz = SPEED_OF_LIGHT_M_PER_S  # c/lambda with lambda in nm gives GHz
    delta_ghz = c_nm_ghz / lo - c_nm_ghz / hi
    return math.floor(delta_ghz / spacing_ghz)


def optimize_rep_rate(
    source: SourceSpec,
    det: DetectorSpec,
    channel_loss_db: float,
    rate_grid: Sequence[float],
    idler_loss_db: float = 0.0,
    spectral_capacity: int | None = None,
    time_bound: bool = True,
    slots_per_channel: float = 1.0,
) -> tuple[list[TradeoffPoint], TradeoffPoint]:
    """Evaluate the detected-coincidence trade-off over a repetition grid.

    At each rate the channel count is the jitter bound capped by the
    spectral budget (default: the full receiver window at 100 GHz).  The
    objective is the accidental-subtracted coincidence rate summed over
    channels: the pump splits over n channels, the shared signal detector
    saturates on the full flux, and each user's detector saturates on one
    channel's idler flux plus darks.  Returns (all points, the maximum).
    """
    if not rate_grid:
        raise ValueError("rate_grid must not be empty")
    if spectral_capacity is None:
        spectral_capacity = spectral_channels(SIGNAL_WINDOW_NM, 100.0)
    if spectral_capacity < 1:
        raise ValueError("spectral_capacity must be >= 1")

    a_s = db_to_transmittance(channel_loss_db)
    a_i = db_to_transmittance(idler_loss_db)
    pair_rate = source.brightness_pairs_per_s_per_mw * source.pump_power_mw
    dark = det.dark_rate_cps
    tau_ns = det.dead_time_ns

    points: list[TradeoffPoint] = []
    for rate in rate_grid:
        n = spectral_capacity
        if time_bound:
            n = min(n, max_time_channels(rate, det.jitter_ps, slots_per_channel))
        if n < 1 or pair_rate == 0:
            points.append(TradeoffPoint(rate, max(n, 0), 0.0, 0.0))
            continue
        mu_per_channel = pair_rate / (rate * n)
        excess = pulse_statistics(mu_per_channel, a_s, a_i).excess

        signal_singles = pair_rate * a_s + dark
        idler_singles = pair_rate * a_i / n + dark
        f_signal = saturated_rate(signal_singles, tau_ns) / signal_singles
        f_idler = saturated_rate(idler_singles, tau_ns) / idler_singles

        per_channel = rate * excess * f_signal * f_idler
        points.append(TradeoffPoint(rate, n, per_channel, n * per_channel))

    best = max(points, key=lambda p: p.total_rate)
    return points, best


def flexgrid_allocate(
    n_users: int,
    total_channels: int,
    min_channels_per_user: int = 1,
    window_nm: tuple[float, float] = SIGNAL_WINDOW_NM,
    spacing_ghz: float = 100.0,
    guard_ghz: float = 0.0,
) -> GridAllocation:
    """Split a channel budget among users as contiguous balanced blocks.

    If the budget cannot give everyone the minimum, the largest user count
    that fits is served instead (fewer users, more channels each).  Block
    sizes differ by at most one channel.
    """
    if n_users < 1:
        raise ValueError("n_users must be >= 1")
    if total_channels <= 0:
        raise ValueError("total_channels must be > 0")
    if min_channels_per_user < 1:
        raise ValueError("min_channels_per_user must be >= 1")
    if not 0 <= guard_ghz < spacing_ghz:
        raise ValueError("guard_ghz must lie in [0, spacing_ghz)")
    capacity = spectral_channels(window_nm, spacing_ghz)
    if total_channels > capacity:
        raise ValueError(
            f"{total_channels} channels exceed the window capacity {capacity}"
        )

    served = min(n_users, total_channels // min_channels_per_user)
    if served < 1:
        raise ValueError("budget cannot serve even one user at the minimum")

    base, extra = divmod(total_channels, served)
    lo, hi = window_nm
    nu_lo_ghz = SPEED_OF_LIGHT_M_PER_S / hi  # window's low-frequency edge
    channels = tuple(
        (
            (nu_lo_ghz + (k + 0.5) * spacing_ghz) / 1e3,
            spacing_ghz - guard_ghz,
        )
        for k in range(total_channels)
    )

    assignment: dict[int, tuple[int, ...]] = {}
    cursor = 0
    for user in range(served):
        size = base + (1 if user < extra else 0)
        assignment[user] = tuple(range(cursor, cursor + size))
        cursor += size
    return GridAllocation(channels=channels, guard_ghz=guard_ghz, assignment=assignment)
