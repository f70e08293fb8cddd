"""Pulsed downconversion pair source and its joint spectral intensity.

Pair generation in a pumped waveguide is thermal per spectral mode, but a
detection window spanning many modes sees Poisson statistics, so each
(pulse, channel) cell draws an independent Poisson number of pairs.  The
pump power sets the total mean pair number per pulse; activating more
channel pairs splits the same pump among them.

The JSI half of the module is a deliberately simple model for cross-talk
budgeting: a shaped multi-channel pump envelope in the sum frequency times
a Gaussian phase-matching profile in the difference frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .topology import ChannelPair, default_channel_pairs, idler_wavelength
from .transport import SPEED_OF_LIGHT_M_PER_S, PhotonBatch

__all__ = [
    "SourceSpec",
    "PairBatch",
    "JsiGrid",
    "mean_pairs_per_pulse",
    "sample_pairs",
    "to_photons",
    "make_pump_channels",
    "compute_jsi",
    "jsi_channel_bounds",
    "crosstalk_matrix",
]

_DEFAULT_SIGNAL_CENTER_NM = 787.5
_DEFAULT_IDLER_CENTER_NM = idler_wavelength(_DEFAULT_SIGNAL_CENTER_NM)


@dataclass(frozen=True)
class SourceSpec:
    """Operating point of the pair source.

    brightness is the detected-pair figure per second and per mW of pump;
    crosstalk_db, when set, is the per-neighbour probability (in dB) that
    an idler leaks into an adjacent demultiplexer port.
    """

    brightness_pairs_per_s_per_mw: float = 7.8e7
    pump_power_mw: float = 0.1
    rep_rate_hz: float = 80e6
    n_channels: int = 4
    signal_center_nm: float = _DEFAULT_SIGNAL_CENTER_NM
    idler_center_nm: float = _DEFAULT_IDLER_CENTER_NM
    crosstalk_db: float | None = None

    def __post_init__(self) -> None:
        if self.brightness_pairs_per_s_per_mw < 0:
            raise ValueError("brightness must be >= 0")
        if self.rep_rate_hz <= 0:
            raise ValueError("rep_rate_hz must be > 0")
        if self.pump_power_mw < 0:
            raise ValueError("pump_power_mw must be >= 0")
        if self.n_channels < 1:
            raise ValueError("n_channels must be >= 1")
        if self.idler_center_nm <= self.signal_center_nm:
            raise ValueError("idler_center_nm must exceed signal_center_nm")
        if self.crosstalk_db is not None:
            if self.crosstalk_db > 0:
                raise ValueError("crosstalk_db must be <= 0")
            if 2.0 * 10.0 ** (self.crosstalk_db / 10.0) >= 1.0:
                raise ValueError("crosstalk probability too large to be a leak")

    @property
    def pulse_period_ps(self) -> int:
        """Pulse period on the integer-ps time grid all timestamps use."""
        return round(1e12 / self.rep_rate_hz)


def mean_pairs_per_pulse(spec: SourceSpec) -> float:
    """Total mean pair number per pump pulse, summed over channels."""
    return spec.brightness_pairs_per_s_per_mw * spec.pump_power_mw / spec.rep_rate_hz


@dataclass
class PairBatch:
    """Generated pairs: pulse of origin, spectral channel, idler exit port.

    channel is the correlated pair's index; idler_channel is the demux port
    the idler actually leaves, which differs from channel when crosstalk
    makes it leak into a neighbour.  time_ps = pulse_index * pulse period.
    """

    pulse_index: np.ndarray
    time_ps: np.ndarray
    channel: np.ndarray
    idler_channel: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.time_ps)
        for arr in (self.pulse_index, self.channel, self.idler_channel):
            if len(arr) != n:
                raise ValueError("PairBatch arrays must share one length")

    def __len__(self) -> int:
        return len(self.time_ps)

    @classmethod
    def empty(cls) -> "PairBatch":
        return cls(
            pulse_index=np.empty(0, dtype=np.int64),
            time_ps=np.empty(0, dtype=np.int64),
            channel=np.empty(0, dtype=np.int32),
            idler_channel=np.empty(0, dtype=np.int32),
        )


def sample_pairs(
    spec: SourceSpec,
    n_pulses: int,
    seed: int,
    active_channels: Sequence[int] | None = None,
    start_time_ps: int = 0,
) -> PairBatch:
    """Draw all pairs emitted over n_pulses, time-sorted.

    Sampling trick: the total count over the whole run is Poisson with mean
    mu * n_pulses, and assigning each pair a uniform (pulse, channel) cell
    makes the per-cell counts exactly independent Poisson(mu / n_active).
    This avoids an O(n_pulses * n_channels) loop for sparse emission.
    """
    if n_pulses < 0:
        raise ValueError("n_pulses must be >= 0")
    if active_channels is None:
        active = tuple(range(spec.n_channels))
    else:
        active = tuple(dict.fromkeys(int(c) for c in active_channels))
        if not active:
            raise ValueError("active_channels must not be empty")
        for c in active:
            if not 0 <= c < spec.n_channels:
                raise ValueError(f"channel {c} outside [0, {spec.n_channels})")

    rng = np.random.default_rng(seed)
    mu_total = mean_pairs_per_pulse(spec)
    n = int(rng.poisson(mu_total * n_pulses)) if n_pulses > 0 and mu_total > 0 else 0
    if n == 0:
        return PairBatch.empty()

    pulse = rng.integers(0, n_pulses, size=n)
    channel = np.asarray(active, dtype=np.int32)[rng.integers(0, len(active), size=n)]

    idler_channel = channel.copy()
    if spec.crosstalk_db is not None:
        p = 10.0 ** (spec.crosstalk_db / 10.0)
        u = rng.random(n)
        p_left = np.where(channel > 0, p, 0.0)
        can_right = channel < spec.n_channels - 1
        go_left = u < p_left
        go_right = ~go_left & can_right & (u < p_left + p)
        idler_channel[go_left] -= 1
        idler_channel[go_right] += 1

    time_ps = start_time_ps + pulse * spec.pulse_period_ps
    order = np.argsort(time_ps, kind="stable")
    return PairBatch(
        pulse_index=pulse[order].astype(np.int64),
        time_ps=time_ps[order].astype(np.int64),
        channel=channel[order],
        idler_channel=idler_channel[order],
    )


def to_photons(
    pairs: PairBatch, pair_table: Sequence[ChannelPair] | None = None
) -> tuple[PhotonBatch, PhotonBatch]:
    """Split a pair batch into its signal and idler photon batches.

    The idler keeps the wavelength of its true pair channel but carries the
    demux port it exits as its routing channel.
    """
    if pair_table is None:
        pair_table = default_channel_pairs()
    signal_nm = np.array([p.signal_nm for p in pair_table])
    idler_nm = np.array([p.idler_nm for p in pair_table])
    if len(pairs) and int(pairs.channel.max(initial=0)) >= len(pair_table):
        raise ValueError("pair channel index outside the wavelength table")

    time = pairs.time_ps.astype(np.float64)
    signal = PhotonBatch(
        time_ps=time.copy(),
        wavelength_nm=signal_nm[pairs.channel],
        channel=pairs.channel.astype(np.int32),
        truth_channel=pairs.channel.astype(np.int32),
    )
    idler = PhotonBatch(
        time_ps=time.copy(),
        wavelength_nm=idler_nm[pairs.channel],
        channel=pairs.idler_channel.astype(np.int32),
        truth_channel=pairs.channel.astype(np.int32),
    )
    return signal, idler


# --- joint spectral intensity -------------------------------------------

_C_NM_HZ = SPEED_OF_LIGHT_M_PER_S * 1e9  # c in nm*Hz, for nu = c/lambda

_GAUSS_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass
class JsiGrid:
    """Joint spectral intensity on a wavelength grid, normalized to unit sum.

    intensity[i, j] is the density at signal_axis_nm[i], idler_axis_nm[j].
    """

    signal_axis_nm: np.ndarray
    idler_axis_nm: np.ndarray
    intensity: np.ndarray
    pump_channels: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if self.intensity.shape != (len(self.signal_axis_nm), len(self.idler_axis_nm)):
            raise ValueError("intensity shape must match the axes")
        if np.any(self.intensity < 0):
            raise ValueError("intensity must be non-negative")


def make_pump_channels(
    n_channels: int = 4,
    channel_width_nm: float = 0.25,
    gap_nm: float = 0.25,
    center_nm: float = 521.4,
) -> tuple[tuple[float, float], ...]:
    """Evenly spaced (center, width) pump channels around center_nm.

    The defaults carve a 1.75 nm pump into four 0.25 nm channels separated
    by 0.25 nm gaps, the shaped-pump arrangement of the integrated design.
    """
    if n_channels < 1:
        raise ValueError("n_channels must be >= 1")
    if channel_width_nm <= 0 or gap_nm < 0:
        raise ValueError("channel_width_nm must be > 0 and gap_nm >= 0")
    pitch = channel_width_nm + gap_nm
    first = center_nm - pitch * (n_channels - 1) / 2.0
    return tuple((first + k * pitch, channel_width_nm) for k in range(n_channels))


def _validate_pump_channels(
    pump_channels: Sequence[tuple[float, float]],
) -> list[tuple[float, float]]:
    channels = sorted((float(c), float(w)) for c, w in pump_channels)
    if not channels:
        raise ValueError("need at least one pump channel")
    for c, w in channels:
        if w <= 0 or c <= 0:
            raise ValueError("pump channels need positive center and width")
    for (c1, w1), (c2, w2) in zip(channels, channels[1:]):
        if c1 + w1 / 2.0 > c2 - w2 / 2.0 + 1e-12:
            raise ValueError(f"pump channels at {c1} and {c2} nm overlap")
    return channels


def _pump_envelope_amplitude(
    lambda_p_nm: np.ndarray,
    channels: Sequence[tuple[float, float]],
    edge_sigma_fraction: float,
) -> np.ndarray:
    """Flat-top per-channel segments with Gaussian edges, combined by max."""
    amp = np.zeros_like(lambda_p_nm)
    for center, width in channels:
        sigma = edge_sigma_fraction * width
        d = np.abs(lambda_p_nm - center) - width / 2.0
        np.maximum(amp, np.exp(-0.5 * (np.maximum(d, 0.0) / sigma) ** 2), out=amp)
    return amp


def _ridge(channels: Sequence[tuple[float, float]], signal_center_nm: float):
    """Energy-conservation mapping constants for a pump channel comb."""
    lo = min(c - w / 2 for c, w in channels)
    hi = max(c + w / 2 for c, w in channels)
    pump_ref = (lo + hi) / 2.0
    nu_s0 = _C_NM_HZ / signal_center_nm
    nu_i0 = _C_NM_HZ / idler_wavelength(signal_center_nm, pump_ref)
    return lo, hi, nu_s0 - nu_i0


def compute_jsi(
    pump_channels: Sequence[tuple[float, float]],
    phasematch_fwhm_nm: float,
    grid_resolution: int = 256,
    signal_center_nm: float = _DEFAULT_SIGNAL_CENTER_NM,
    edge_sigma_fraction: float = 0.10,
) -> JsiGrid:
    """JSI of a shaped multi-channel pump through a Gaussian phase matcher.

    The intensity is |pump envelope(nu_s + nu_i)|^2 times a Gaussian in
    (nu_s - nu_i) centred on the design point; phasematch_fwhm_nm is that
    Gaussian's intensity FWHM quoted as a signal-wavelength width at fixed
    pump frequency.  Axes are sized to cover every channel plus tails.
    """
    if grid_resolution < 64:
        raise ValueError("grid_resolution must be >= 64")
    if phasematch_fwhm_nm <= 0:
        raise ValueError("phasematch_fwhm_nm must be > 0")
    if not 0 < edge_sigma_fraction < 1:
        raise ValueError("edge_sigma_fraction must lie in (0, 1)")
    channels = _validate_pump_channels(pump_channels)
    lam_lo, lam_hi, delta0 = _ridge(channels, signal_center_nm)

    fwhm_nu_s = _C_NM_HZ * phasematch_fwhm_nm / signal_center_nm**2
    sigma_nu_s = fwhm_nu_s * _GAUSS_FWHM_TO_SIGMA  # spread of nu_s at fixed pump
    sigma_delta = 2.0 * sigma_nu_s  # same spread expressed in nu_s - nu_i

    nu_p_lo = _C_NM_HZ / lam_hi
    nu_p_hi = _C_NM_HZ / lam_lo
    max_edge_sigma_nu = max(
        edge_sigma_fraction * w * _C_NM_HZ / (c * c) for c, w in channels
    )
    pad = 4.0 * sigma_nu_s + 2.0 * max_edge_sigma_nu

    nu_s = np.linspace(
        (nu_p_lo + delta0) / 2.0 - pad, (nu_p_hi + delta0) / 2.0 + pad, grid_resolution
    )
    nu_i = np.linspace(
        (nu_p_lo - delta0) / 2.0 - pad, (nu_p_hi - delta0) / 2.0 + pad, grid_resolution
    )
    signal_axis = np.sort(_C_NM_HZ / nu_s)
    idler_axis = np.sort(_C_NM_HZ / nu_i)

    nu_s_grid = _C_NM_HZ / signal_axis[:, None]
    nu_i_grid = _C_NM_HZ / idler_axis[None, :]
    lam_p = _C_NM_HZ / (nu_s_grid + nu_i_grid)

    amp = _pump_envelope_amplitude(lam_p, channels, edge_sigma_fraction)
    pm = np.exp(-0.5 * ((nu_s_grid - nu_i_grid - delta0) / sigma_delta) ** 2)
    intensity = amp**2 * pm

    total = intensity.sum()
    if total <= 0:
        raise ValueError("JSI has no support on the grid")
    return JsiGrid(
        signal_axis_nm=signal_axis,
        idler_axis_nm=idler_axis,
        intensity=intensity / total,
        pump_channels=tuple(channels),
    )


def jsi_channel_bounds(
    pump_channels: Sequence[tuple[float, float]],
    signal_center_nm: float = _DEFAULT_SIGNAL_CENTER_NM,
) -> tuple[tuple[tuple[float, float], ...], tuple[tuple[float, float], ...]]:
    """Signal and idler wavelength bands paired with each pump channel.

    Each pump channel's edges map through energy conservation along the
    phase-matching ridge, giving the (lo, hi) nm band its photons occupy on
    each axis.
    """
    channels = _validate_pump_channels(pump_channels)
    _, _, delta0 = _ridge(channels, signal_center_nm)
    signal_bands = []
    idler_bands = []
    for center, width in channels:
        nu_p_lo = _C_NM_HZ / (center + width / 2.0)
        nu_p_hi = _C_NM_HZ / (center - width / 2.0)
        s = sorted(
            (_C_NM_HZ / ((nu_p_lo + delta0) / 2.0), _C_NM_HZ / ((nu_p_hi + delta0) / 2.0))
        )
        i = sorted(
            (_C_NM_HZ / ((nu_p_lo - delta0) / 2.0), _C_NM_HZ / ((nu_p_hi - delta0) / 2.0))
        )
        signal_bands.append((s[0], s[1]))
        idler_bands.append((i[0], i[1]))
    order = np.argsort([b[0] for b in signal_bands])
    return (
        tuple(signal_bands[k] for k in order),
        tuple(idler_bands[k] for k in order),
    )


def _band_mask(axis: np.ndarray, band: tuple[float, float]) -> np.ndarray:
    lo, hi = band
    return (axis >= lo) & (axis < hi)


def crosstalk_matrix(
    jsi: JsiGrid,
    signal_bounds: Sequence[tuple[float, float]],
    idler_bounds: Sequence[tuple[float, float]],
) -> np.ndarray:
    """Relative power leakage between channel bands, in dB.

    Entry (i, j) is 10*log10 of the JSI power inside signal band i and
    idler band j, referred to the matched band i x i; the diagonal is 0 dB
    by construction.  Bounds must be sorted and disjoint on each axis.
    """
    for name, bounds in (("signal", signal_bounds), ("idler", idler_bounds)):
        if not bounds:
            raise ValueError(f"{name} bounds must not be empty")
        for lo, hi in bounds:
            if not lo < hi:
                raise ValueError(f"empty {name} band ({lo}, {hi})")
        for (lo1, hi1), (lo2, _) in zip(bounds, bounds[1:]):
            if not hi1 <= lo2:
                raise ValueError(f"{name} bounds must be sorted and disjoint")
    if len(signal_bounds) != len(idler_bounds):
        raise ValueError("need one idler band per signal band")

    n = len(signal_bounds)
    power = np.zeros((n, n))
    for i, sb in enumerate(signal_bounds):
        srows = _band_mask(jsi.signal_axis_nm, sb)
        for j, ib in enumerate(idler_bounds):
            icols = _band_mask(jsi.idler_axis_nm, ib)
            power[i, j] = jsi.intensity[np.ix_(srows, icols)].sum()
    diag = np.diag(power)
    if np.any(diag <= 0):
        raise ValueError("a matched band carries no power; check the bounds")
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(power / diag[:, None])
