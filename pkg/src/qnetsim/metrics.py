"""Closed-form figure-of-merit chain for an entangled-pair link.

CAR -> visibility -> QBER -> secure key rate.  The visibility inferred
from CAR accounts only for accidental coincidences; no other error
channel is modelled, so QBER = (1 - V)/2 throughout.

A unit subtlety worth stating once: analytic_car is a ratio of a
coincidence rate to a product of singles rates, so all three inputs must
share one time base.  Per pump pulse is the natural choice for a pulsed
source; per-second rates must all be divided by the repetition rate
first, otherwise the ratio silently changes by a factor of R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

__all__ = [
    "QkdParams",
    "VisibilityResult",
    "KeyRate",
    "MetricsRecord",
    "analytic_car",
    "mux_car",
    "visibility",
    "qber",
    "binary_entropy",
    "skr",
    "metrics_from_car",
]


@dataclass(frozen=True)
class QkdParams:
    """Protocol constants: q is the basis reconciliation factor (1/2 for
    a passive two-basis entanglement protocol), f_e the error-correction
    inefficiency relative to the Shannon limit."""

    q: float = 0.5
    f_e: float = 1.11

    def __post_init__(self) -> None:
        if not 0.0 < self.q <= 1.0:
            raise ValueError("q must lie in (0, 1]")
        if self.f_e < 1.0:
            raise ValueError("f_e must be >= 1")


class VisibilityResult(NamedTuple):
    value: float
    clamped: bool


class KeyRate(NamedTuple):
    raw: float
    clamped: float


@dataclass(frozen=True)
class MetricsRecord:
    """One link's full metric chain, as written to the metrics CSV."""

    car: float
    car_error: float
    visibility: float
    qber: float
    gain: float
    skr_per_pulse: float
    skr_per_second: float
    skr_raw_per_pulse: float
    flag: str = ""
    params: QkdParams = field(default_factory=QkdParams)


def analytic_car(
    pair_rate: float,
    signal_transmittance: float,
    idler_transmittance: float,
    signal_singles: float,
    idler_singles: float,
) -> float:
    """CAR of a pair source from its rates: mu*a_s*a_i/(c_s*c_i) + 1.

    pair_rate is the generated-pair rate, the transmittances are the
    end-to-end arm efficiencies, and the singles are the measured count
    rates of each arm.  All rates in the same time base (see module
    docstring); with dark-free singles c = mu*a the formula reduces to
    1/mu + 1, the familiar inverse-brightness law.
    """
    for name, t in (
        ("signal_transmittance", signal_transmittance),
        ("idler_transmittance", idler_transmittance),
    ):
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    if pair_rate < 0:
        raise ValueError("pair_rate must be >= 0")
    if signal_singles <= 0 or idler_singles <= 0:
        raise ValueError("singles rates must be > 0")
    return pair_rate * signal_transmittance * idler_transmittance / (
        signal_singles * idler_singles
    ) + 1.0


def mux_car(car_single: float, n_channels: int, penalty: float = 1.0) -> float:
    """CAR after summing n demultiplexed channels at equal total pump.

    Splitting the pump over n channels leaves the true-coincidence total
    unchanged but divides each channel's accidentals by n, so
    CAR_n - 1 = n * (CAR_1 - 1).  penalty scales the improvement factor
    below the ideal n to model channel cross-talk (e.g. 1.91/2 for a
    measured 1.91x two-channel gain).
    """
    if isinstance(n_channels, bool) or not isinstance(n_channels, int):
        raise TypeError("n_channels must be an integer")
    if n_channels < 1:
        raise ValueError("n_channels must be >= 1")
    if car_single < 1.0:
        raise ValueError("car_single must be >= 1")
    if penalty <= 0:
        raise ValueError("penalty must be > 0")
    return 1.0 + penalty * n_channels * (car_single - 1.0)


def visibility(car: float) -> VisibilityResult:
    """Two-photon interference visibility inferred from CAR: (CAR-2)/(CAR-1).

    Clamped to [0, 1] with a flag; CAR below 2 is a physical regime
    (accidentals dominate), CAR at or below 1 is not and raises.
    """
    if math.isnan(car):
        raise ValueError("car is NaN")
    if car <= 1.0:
        raise ValueError("visibility undefined for car <= 1")
    if math.isinf(car):
        return VisibilityResult(1.0, False)
    v = (car - 2.0) / (car - 1.0)
    if v < 0.0:
        return VisibilityResult(0.0, True)
    return VisibilityResult(v, False)


def qber(vis: float) -> float:
    """Error rate when accidentals are the only error source: (1 - V)/2."""
    if not 0.0 <= vis <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    return (1.0 - vis) / 2.0


def binary_entropy(x: float) -> float:
    """H2(x) in bits, with the 0*log(0) = 0 convention."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("binary_entropy domain is [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def skr(params: QkdParams, gain: float, qber_value: float) -> KeyRate:
    """Asymptotic secure key rate per pulse: q*gain*(1 - (1+f_e)*H2(QBER)).

    Returned both raw (can be negative past the QBER threshold) and
    clamped at zero.
    """
    if gain < 0:
        raise ValueError("gain must be >= 0")
    if not 0.0 <= qber_value <= 0.5:
        raise ValueError("qber must lie in [0, 0.5]")
    raw = params.q * gain * (1.0 - (1.0 + params.f_e) * binary_entropy(qber_value))
    return KeyRate(raw=raw, clamped=max(raw, 0.0))


def metrics_from_car(
    car: float,
    car_error: float,
    gain: float,
    rep_rate_hz: float,
    params: QkdParams | None = None,
) -> MetricsRecord:
    """Evaluate the whole chain from a measured CAR, tolerating edge cases.

    NaN CAR (no counts at all) yields a fully flagged record; infinite CAR
    (no accidentals) gives V = 1; CAR <= 1 is reported as zero visibility
    with a flag instead of erroring, since noisy short runs can cross it.
    """
    if params is None:
        params = QkdParams()
    if rep_rate_hz <= 0:
        raise ValueError("rep_rate_hz must be > 0")

    if math.isnan(car):
        nan = math.nan
        return MetricsRecord(
            car=nan, car_error=nan, visibility=nan, qber=nan, gain=gain,
            skr_per_pulse=nan, skr_per_second=nan, skr_raw_per_pulse=nan,
            flag="undefined_car", params=params,
        )

    if math.isinf(car):
        vis, clamped = 1.0, False
        flag = "infinite_car"
    elif car <= 1.0:
        vis, clamped = 0.0, True
        flag = "car_not_above_one"
    else:
        vis, clamped = visibility(car)
        flag = "clamped_visibility" if clamped else ""

    q_value = qber(vis)
    rate = skr(params, gain, q_value)
    return MetricsRecord(
        car=car,
        car_error=car_error,
        visibility=vis,
        qber=q_value,
        gain=gain,
        skr_per_pulse=rate.clamped,
        skr_per_second=rate.clamped * rep_rate_hz,
        skr_raw_per_pulse=rate.raw,
        flag=flag,
        params=params,
    )
