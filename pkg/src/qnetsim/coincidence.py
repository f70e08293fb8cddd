"""Coincidence counting and CAR estimation from timestamp streams.

All counting uses half-open integer bins: the bin at offset k covers
[k - w//2, k + (w - w//2)) picoseconds of arrival-time difference
(idler minus signal), so bins of width w tile the delay axis with no gaps
or double counting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "PulseStats",
    "pulse_statistics",
    "analytic_car_exact",
    "count_pairs",
    "CoincidenceHistogram",
    "histogram",
    "accidental_level",
    "CarResult",
    "car_from_tags",
    "combine_car",
    "assign_time_slots",
    "demux_time_slots",
]


class PulseStats(NamedTuple):
    """Per-pulse click probabilities of a pair source feeding two arms."""

    signal: float
    idler: float
    both: float
    accidental: float
    excess: float


def pulse_statistics(mu: float, t_signal: float, t_idler: float) -> PulseStats:
    """Exact Poisson-pair click probabilities for one pump pulse.

    mu is the mean pair number per pulse; t_signal and t_idler are the
    end-to-end transmittances of the two arms (detection included).  The
    accidental term is what neighbouring-pulse slots measure; excess is
    the genuine same-pair surplus in the matched slot.
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    for t in (t_signal, t_idler):
        if not 0.0 <= t <= 1.0:
            raise ValueError("transmittances must lie in [0, 1]")
    p_s = -math.expm1(-mu * t_signal)
    p_i = -math.expm1(-mu * t_idler)
    both = p_s + p_i - 1.0 + math.exp(-mu * (t_signal + t_idler - t_signal * t_idler))
    accidental = p_s * p_i
    excess = math.exp(-mu * (t_signal + t_idler)) * math.expm1(mu * t_signal * t_idler)
    return PulseStats(signal=p_s, idler=p_i, both=both, accidental=accidental, excess=excess)


def analytic_car_exact(mu: float, t_signal: float, t_idler: float) -> float:
    """CAR of a pulsed pair source from the exact per-pulse statistics."""
    stats = pulse_statistics(mu, t_signal, t_idler)
    if stats.accidental == 0.0:
        return math.inf
    return stats.both / stats.accidental


def count_pairs(
    signal_tags: np.ndarray,
    idler_tags: np.ndarray,
    window_ps: int,
    offset_ps: int = 0,
) -> int:
    """Number of tag pairs with idler - signal delay in the bin at offset_ps.

    Both inputs must be sorted.  Every pairing inside the bin counts, so a
    burst of clicks contributes multiplicatively, as in a start-stop-free
    correlator.
    """
    if window_ps <= 0:
        raise ValueError("window_ps must be > 0")
    if len(signal_tags) == 0 or len(idler_tags) == 0:
        return 0
    lo = np.searchsorted(
        idler_tags, signal_tags + (offset_ps - window_ps // 2), side="left"
    )
    hi = np.searchsorted(
        idler_tags, signal_tags + (offset_ps + (window_ps - window_ps // 2)), side="left"
    )
    return int(np.sum(hi - lo))


@dataclass
class CoincidenceHistogram:
    """Delay histogram between two tag streams (idler minus signal)."""

    offsets_ps: np.ndarray
    counts: np.ndarray
    bin_width_ps: int

    def __post_init__(self) -> None:
        if len(self.offsets_ps) != len(self.counts):
            raise ValueError("offsets and counts must share one length")


def histogram(
    signal_tags: np.ndarray,
    idler_tags: np.ndarray,
    bin_width_ps: int,
    max_offset_ps: int,
    center_ps: int = 0,
) -> CoincidenceHistogram:
    """Coincidence histogram over [center - max_offset, center + max_offset]."""
    if bin_width_ps <= 0:
        raise ValueError("bin_width_ps must be > 0")
    n_side = max_offset_ps // bin_width_ps
    offsets = center_ps + bin_width_ps * np.arange(-n_side, n_side + 1, dtype=np.int64)
    counts = np.array(
        [count_pairs(signal_tags, idler_tags, bin_width_ps, int(o)) for o in offsets],
        dtype=np.int64,
    )
    return CoincidenceHistogram(offsets_ps=offsets, counts=counts, bin_width_ps=bin_width_ps)


def accidental_level(
    rate_a_hz: float, rate_b_hz: float, duration_ps: float, bin_width_ps: float
) -> float:
    """Expected flat histogram floor for two independent Poisson streams."""
    return rate_a_hz * rate_b_hz * duration_ps * 1e-12 * bin_width_ps * 1e-12


@dataclass(frozen=True)
class CarResult:
    """CAR measured from one or more stream pairs, with its Poisson error.

    unmatched_counts is the expected accidental count in the matched
    bin(s): the per-slot average for a single measurement, the sum of
    per-measurement averages for a pooled one.  Either way
    car = matched_counts / unmatched_counts whenever it is positive.
    """

    car: float
    car_error: float
    matched_counts: int
    unmatched_counts: float
    unmatched_total: int
    n_unmatched_slots: int
    flag: str = ""


def _car_from_counts(matched: int, unmatched_total: int, n_slots: int) -> CarResult:
    if unmatched_total == 0:
        return CarResult(
            car=math.inf if matched > 0 else math.nan,
            car_error=math.nan,
            matched_counts=matched,
            unmatched_counts=0.0,
            unmatched_total=0,
            n_unmatched_slots=n_slots,
            flag="infinite_car" if matched > 0 else "no_counts",
        )
    per_slot = unmatched_total / n_slots
    car = matched / per_slot
    car_error = car * math.sqrt(1.0 / max(matched, 1) + 1.0 / unmatched_total)
    return CarResult(
        car=car,
        car_error=car_error,
        matched_counts=matched,
        unmatched_counts=per_slot,
        unmatched_total=unmatched_total,
        n_unmatched_slots=n_slots,
    )


def car_from_tags(
    signal_tags: np.ndarray,
    idler_tags: np.ndarray,
    pulse_period_ps: float,
    window_ps: int,
    expected_offset_ps: int,
    n_unmatched_slots: int = 4,
) -> CarResult:
    """CAR from timestamps: matched slot over the mean of off-pulse slots.

    The matched bin sits at the expected arrival-time offset; the
    accidental estimate averages the bins displaced by whole pulse periods
    on both sides, the standard pulsed-source recipe.  A zero accidental
    total yields a flagged result rather than a crash.
    """
    if n_unmatched_slots < 1:
        raise ValueError("n_unmatched_slots must be >= 1")
    if not window_ps <= pulse_period_ps / 2:
        raise ValueError("window_ps must not exceed half the pulse period")
    matched = count_pairs(signal_tags, idler_tags, window_ps, expected_offset_ps)
    unmatched_total = 0
    for k in range(1, n_unmatched_slots + 1):
        for sign in (-1, 1):
            offset = expected_offset_ps + int(round(sign * k * pulse_period_ps))
            unmatched_total += count_pairs(signal_tags, idler_tags, window_ps, offset)
    return _car_from_counts(matched, unmatched_total, 2 * n_unmatched_slots)


def combine_car(results: Sequence[CarResult]) -> CarResult:
    """Pool several measurements into one CAR estimate.

    Matched counts add, and each measurement contributes its own
    matched-bin accidental level, so a link built from several channel
    pairs keeps car = total matched / total expected accidentals.
    """
    if not results:
        raise ValueError("need at least one result")
    matched = int(sum(r.matched_counts for r in results))
    unmatched_total = int(sum(r.unmatched_total for r in results))
    n_slots = int(sum(r.n_unmatched_slots for r in results))
    level = sum(r.unmatched_total / r.n_unmatched_slots for r in results)
    if level == 0:
        return CarResult(
            car=math.inf if matched > 0 else math.nan,
            car_error=math.nan,
            matched_counts=matched,
            unmatched_counts=0.0,
            unmatched_total=0,
            n_unmatched_slots=n_slots,
            flag="infinite_car" if matched > 0 else "no_counts",
        )
    car = matched / level
    level_var = sum(r.unmatched_total / r.n_unmatched_slots**2 for r in results)
    car_error = car * math.sqrt(1.0 / max(matched, 1) + level_var / level**2)
    return CarResult(
        car=car,
        car_error=car_error,
        matched_counts=matched,
        unmatched_counts=level,
        unmatched_total=unmatched_total,
        n_unmatched_slots=n_slots,
    )


def assign_time_slots(
    time_ps: np.ndarray,
    slot_origin_ps: float,
    slot_pitch_ps: float,
    n_slots: int,
    slot_window_ps: float,
    pulse_period_ps: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-tag slot assignment for a temporally multiplexed stream.

    Channel k arrives k * slot_pitch_ps later within each pulse period.  A
    tag at in-slot position [0, slot_window_ps] of slot k < n_slots gets
    slot k and its time rewritten with the slot delay removed; all other
    tags get slot -1.  Returns (slot, rewritten_time_ps), both full length.
    """
    if n_slots < 1:
        raise ValueError("n_slots must be >= 1")
    if slot_pitch_ps <= 0 or pulse_period_ps <= 0:
        raise ValueError("slot_pitch_ps and pulse_period_ps must be > 0")
    if n_slots * slot_pitch_ps > pulse_period_ps + 1e-9:
        raise ValueError(
            f"{n_slots} slots of {slot_pitch_ps} ps overrun the "
            f"{pulse_period_ps} ps period (channel combs would alias)"
        )
    rel = np.mod(time_ps.astype(np.float64) - slot_origin_ps, pulse_period_ps)
    slot = np.floor(rel / slot_pitch_ps).astype(np.int64)
    pos = rel - slot * slot_pitch_ps
    keep = (slot < n_slots) & (pos <= slot_window_ps)
    slot = np.where(keep, slot, -1).astype(np.int32)
    rewritten = time_ps - np.where(
        keep, np.rint(slot * slot_pitch_ps).astype(np.int64), 0
    )
    return slot, rewritten


def demux_time_slots(
    time_ps: np.ndarray,
    slot_origin_ps: float,
    slot_pitch_ps: float,
    n_slots: int,
    slot_window_ps: float,
    pulse_period_ps: float,
) -> dict[int, np.ndarray]:
    """Sort a multiplexed stream into per-slot tag streams.

    Returns {slot: rewritten times, sorted}; discarded tags appear in no
    slot.  assign_time_slots exposes the underlying per-tag assignment for
    truth-label bookkeeping.
    """
    slot, rewritten = assign_time_slots(
        time_ps, slot_origin_ps, slot_pitch_ps, n_slots, slot_window_ps, pulse_period_ps
    )
    out: dict[int, np.ndarray] = {}
    for k in range(n_slots):
        times = rewritten[slot == k]
        out[k] = np.sort(times)
    return out
