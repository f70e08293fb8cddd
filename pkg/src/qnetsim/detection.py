"""Single-photon detector model and the binary time-tag interchange format.

Detection applies, in order: wavelength-band quantum efficiency, Gaussian
timing jitter, dark counts uniform over the run, timestamp quantization to
integer picoseconds, and a non-paralyzable dead time.  Clicks keep the
channel of the photon that caused them (dark counts carry -1) so that
simulated runs can be scored against ground truth.

Tag files are flat little-endian 16-byte records:
u64 time_ps, u32 detector_id, u16 truth_channel (0xFFFF = none),
u16 reserved = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .transport import PhotonBatch

__all__ = [
    "DetectorSpec",
    "Clicks",
    "si_apd",
    "snspd",
    "band_efficiency",
    "apply_dead_time",
    "saturated_rate",
    "detect",
    "TAG_DTYPE",
    "NO_TRUTH",
    "write_tag_file",
    "read_tag_file",
]

NO_TRUTH = 0xFFFF

TAG_DTYPE = np.dtype(
    [
        ("time_ps", "<u8"),
        ("detector_id", "<u4"),
        ("truth_channel", "<u2"),
        ("reserved", "<u2"),
    ]
)


@dataclass(frozen=True)
class DetectorSpec:
    """One detector: efficiency per wavelength band plus timing response.

    efficiency_by_band maps (lo_nm, hi_nm) ranges to quantum efficiency;
    a photon outside every band is a modelling error, not a zero, and
    raises.  jitter_ps is the Gaussian RMS of the timing response.
    """

    name: str
    efficiency_by_band: tuple[tuple[float, float, float], ...]
    jitter_ps: float = 0.0
    dark_rate_cps: float = 0.0
    dead_time_ns: float = 0.0

    def __post_init__(self) -> None:
        if not self.efficiency_by_band:
            raise ValueError("detector needs at least one efficiency band")
        for lo, hi, eff in self.efficiency_by_band:
            if not lo < hi:
                raise ValueError(f"band ({lo}, {hi}) is empty")
            if not 0.0 <= eff <= 1.0:
                raise ValueError(f"efficiency {eff} outside [0, 1]")
        if self.jitter_ps < 0:
            raise ValueError("jitter_ps must be >= 0")
        if self.dark_rate_cps < 0:
            raise ValueError("dark_rate_cps must be >= 0")
        if self.dead_time_ns < 0:
            raise ValueError("dead_time_ns must be >= 0")


def si_apd(name: str = "si-apd", **overrides) -> DetectorSpec:
    """Silicon APD for the short arm: 60% around 780 nm, blind at telecom."""
    return DetectorSpec(
        name=name, efficiency_by_band=((700.0, 900.0, 0.60),), **overrides
    )


def snspd(name: str = "snspd", **overrides) -> DetectorSpec:
    """Nanowire detector: 75% in the telecom band, 6% residual at 780 nm.

    The short-wavelength band is deliberately included so one nanowire
    channel can terminate both arms of a ground user.
    """
    return DetectorSpec(
        name=name,
        efficiency_by_band=((1400.0, 1700.0, 0.75), (700.0, 900.0, 0.06)),
        **overrides,
    )


def band_efficiency(spec: DetectorSpec, wavelength_nm) -> np.ndarray | float:
    """Quantum efficiency at the given wavelength(s); raises if uncovered."""
    wl = np.atleast_1d(np.asarray(wavelength_nm, dtype=float))
    eff = np.full(wl.shape, np.nan)
    for lo, hi, e in spec.efficiency_by_band:
        mask = (wl >= lo) & (wl <= hi)
        eff[mask] = e
    if np.isnan(eff).any():
        bad = wl[np.isnan(eff)][0]
        raise ValueError(
            f"detector {spec.name!r} has no efficiency band covering {bad} nm"
        )
    if np.isscalar(wavelength_nm) or np.asarray(wavelength_nm).ndim == 0:
        return float(eff[0])
    return eff


@dataclass
class Clicks:
    """Time-sorted detector clicks with their ground-truth channel (-1 = dark)."""

    time_ps: np.ndarray
    truth_channel: np.ndarray

    def __post_init__(self) -> None:
        if len(self.time_ps) != len(self.truth_channel):
            raise ValueError("Clicks arrays must share one length")

    def __len__(self) -> int:
        return len(self.time_ps)

    @classmethod
    def empty(cls) -> "Clicks":
        return cls(
            time_ps=np.empty(0, dtype=np.int64),
            truth_channel=np.empty(0, dtype=np.int32),
        )


def apply_dead_time(time_ps_sorted: np.ndarray, dead_time_ns: float) -> np.ndarray:
    """Keep mask for a non-paralyzable dead time over sorted timestamps.

    A click is kept iff it falls at least the dead time after the last kept
    click; rejected clicks do not extend the dead window.  Unsorted input
    is rejected rather than silently miscounted.
    """
    t = np.asarray(time_ps_sorted)
    n = len(t)
    if n > 1 and np.any(np.diff(t) < 0):
        raise ValueError("timestamps must be sorted ascending")
    keep = np.zeros(n, dtype=bool)
    dead_ps = dead_time_ns * 1e3
    if dead_ps <= 0:
        keep[:] = True
        return keep
    i = 0
    while i < n:
        keep[i] = True
        i = int(np.searchsorted(t, t[i] + dead_ps, side="left"))
    return keep


def saturated_rate(rate_hz: float, dead_time_ns: float) -> float:
    """Mean click rate of a non-paralyzable detector fed Poisson arrivals."""
    return rate_hz / (1.0 + rate_hz * dead_time_ns * 1e-9)


def detect(
    photons: PhotonBatch,
    spec: DetectorSpec,
    duration_ps: int,
    seed: int,
) -> Clicks:
    """Run the detector over one acquisition of length duration_ps.

    Clicks that jitter outside [0, duration) are dropped, matching a
    hardware gate on the acquisition window.
    """
    if duration_ps <= 0:
        raise ValueError("duration_ps must be > 0")
    rng = np.random.default_rng(seed)

    if len(photons):
        eff = np.asarray(band_efficiency(spec, photons.wavelength_nm))
        kept = rng.random(len(photons)) < eff
        t = photons.time_ps[kept].astype(np.float64)
        truth = photons.truth_channel[kept].astype(np.int32)
        if spec.jitter_ps > 0:
            t = t + rng.normal(0.0, spec.jitter_ps, size=len(t))
    else:
        t = np.empty(0, dtype=np.float64)
        truth = np.empty(0, dtype=np.int32)

    n_dark = int(rng.poisson(spec.dark_rate_cps * duration_ps * 1e-12))
    if n_dark:
        t = np.concatenate([t, rng.uniform(0.0, duration_ps, size=n_dark)])
        truth = np.concatenate([truth, np.full(n_dark, -1, dtype=np.int32)])

    time_ps = np.rint(t).astype(np.int64)
    in_run = (time_ps >= 0) & (time_ps < duration_ps)
    time_ps = time_ps[in_run]
    truth = truth[in_run]

    order = np.argsort(time_ps, kind="stable")
    time_ps = time_ps[order]
    truth = truth[order]

    keep = apply_dead_time(time_ps, spec.dead_time_ns)
    return Clicks(time_ps=time_ps[keep], truth_channel=truth[keep])


def write_tag_file(path: str | Path, clicks: Clicks, detector_id: int) -> None:
    """Write clicks as 16-byte binary tag records (see module docstring)."""
    if not 0 <= detector_id < 2**32:
        raise ValueError("detector_id must fit in u32")
    records = np.zeros(len(clicks), dtype=TAG_DTYPE)
    if np.any(clicks.time_ps < 0):
        raise ValueError("tag times must be non-negative")
    records["time_ps"] = clicks.time_ps.astype(np.uint64)
    records["detector_id"] = detector_id
    truth = clicks.truth_channel.astype(np.int64)
    records["truth_channel"] = np.where(truth < 0, NO_TRUTH, truth).astype(np.uint16)
    Path(path).write_bytes(records.tobytes())


def read_tag_file(path: str | Path) -> tuple[Clicks, int]:
    """Read a tag file back into (Clicks, detector_id).

    Truncated files are a hard error naming the byte offset of the bad
    record; dark tags come back with truth_channel -1.
    """
    raw = Path(path).read_bytes()
    if len(raw) % TAG_DTYPE.itemsize != 0:
        offset = len(raw) - len(raw) % TAG_DTYPE.itemsize
        raise ValueError(
            f"{path}: truncated record at byte offset {offset} "
            f"(file size {len(raw)} is not a multiple of {TAG_DTYPE.itemsize})"
        )
    records = np.frombuffer(raw, dtype=TAG_DTYPE)
    if len(records) and np.any(records["reserved"] != 0):
        bad = int(np.nonzero(records["reserved"] != 0)[0][0])
        raise ValueError(
            f"{path}: malformed record at byte offset {bad * TAG_DTYPE.itemsize} "
            "(reserved field not zero)"
        )
    detector_id = int(records["detector_id"][0]) if len(records) else 0
    truth = records["truth_channel"].astype(np.int32)
    truth[truth == NO_TRUTH] = -1
    clicks = Clicks(
        time_ps=records["time_ps"].astype(np.int64),
        truth_channel=truth,
    )
    return clicks, detector_id
