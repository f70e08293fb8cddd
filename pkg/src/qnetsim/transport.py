"""Lossy, dispersive channel segments and the fibre delay-line demultiplexer.

A channel thins a photon stream by its dB budget and shifts arrival times;
the frequency-to-time mapper (FTM) is a cascade of fibre Bragg gratings
spliced along one fibre, so each spectral channel picks up a round-trip
delay proportional to its grating position.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT_M_PER_S = 299_792_458.0

__all__ = [
    "SPEED_OF_LIGHT_M_PER_S",
    "ChannelSpec",
    "FtmSpec",
    "PhotonBatch",
    "concat_photons",
    "db_to_transmittance",
    "ftm_delay",
    "propagate",
]


def db_to_transmittance(loss_db: float) -> float:
    """Power transmittance of a loss budget: 10^(-dB/10).  Gain is rejected."""
    if loss_db < 0:
        raise ValueError("loss_db must be >= 0 (no gain elements)")
    return 10.0 ** (-loss_db / 10.0)


@dataclass(frozen=True)
class ChannelSpec:
    """One optical path from source to detector.

    ftm_delay_ps is the adjacent-channel delay increment of an FTM stage on
    this path (0 disables it); a photon in spectral channel k is delayed by
    k * ftm_delay_ps on top of the common propagation delay.
    """

    loss_db: float = 0.0
    propagation_delay_ps: float = 0.0
    extra_jitter_ps: float = 0.0
    ftm_delay_ps: float = 0.0

    def __post_init__(self) -> None:
        if self.loss_db < 0:
            raise ValueError("loss_db must be >= 0")
        if self.extra_jitter_ps < 0:
            raise ValueError("extra_jitter_ps must be >= 0")
        if self.ftm_delay_ps < 0:
            raise ValueError("ftm_delay_ps must be >= 0")


@dataclass(frozen=True)
class FtmSpec:
    """Geometry of a grating-cascade frequency-to-time mapper."""

    n_gratings: int = 4
    segment_length_m: float = 0.35  # fibre between adjacent gratings
    group_index: float = 1.468  # PM fibre near 780 nm
    circulator_loss_db: float = 3.0
    array_loss_db: float = 7.0

    def __post_init__(self) -> None:
        if self.n_gratings < 1:
            raise ValueError("n_gratings must be >= 1")
        if self.segment_length_m <= 0:
            raise ValueError("segment_length_m must be > 0")
        if self.group_index < 1.0:
            raise ValueError("group_index must be >= 1")

    @property
    def insertion_loss_db(self) -> float:
        return self.circulator_loss_db + self.array_loss_db


def ftm_delay(channel_index: int, ftm: FtmSpec) -> float:
    """Round-trip delay of channel k relative to channel 0, in ps.

    Channel k reflects off the k-th grating, so its light makes k extra
    double passes of the inter-grating fibre:
    delay = k * 2 * L * n_group / c.
    """
    if not 0 <= channel_index < ftm.n_gratings:
        raise ValueError(
            f"channel_index {channel_index} outside grating array of size {ftm.n_gratings}"
        )
    one_hop_s = 2.0 * ftm.segment_length_m * ftm.group_index / SPEED_OF_LIGHT_M_PER_S
    return channel_index * one_hop_s * 1e12


@dataclass
class PhotonBatch:
    """Column-wise photon arrivals.

    channel is the spectral channel that routing and FTM delays act on;
    truth_channel records which pair the photon came from (-1 if unknown)
    and survives all the way into detector tags for bookkeeping.
    """

    time_ps: np.ndarray
    wavelength_nm: np.ndarray
    channel: np.ndarray
    truth_channel: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.time_ps)
        if not (len(self.wavelength_nm) == len(self.channel) == len(self.truth_channel) == n):
            raise ValueError("all PhotonBatch columns must have equal length")

    def __len__(self) -> int:
        return len(self.time_ps)

    @classmethod
    def empty(cls) -> "PhotonBatch":
        return cls(
            np.empty(0, dtype=np.float64),
            np.empty(0, dtype=np.float64),
            np.empty(0, dtype=np.int32),
            np.empty(0, dtype=np.int32),
        )


def concat_photons(batches: list[PhotonBatch]) -> PhotonBatch:
    """Merge photon batches into one stream, time-ordered."""
    if not batches:
        return PhotonBatch.empty()
    t = np.concatenate([b.time_ps for b in batches])
    order = np.argsort(t, kind="stable")
    return PhotonBatch(
        t[order],
        np.concatenate([b.wavelength_nm for b in batches])[order],
        np.concatenate([b.channel for b in batches])[order],
        np.concatenate([b.truth_channel for b in batches])[order],
    )


def propagate(photons: PhotonBatch, channel: ChannelSpec, seed: int) -> PhotonBatch:
    """Send a photon batch through one channel.

    Each photon survives independently with the channel transmittance;
    survivors get the common propagation delay, their spectral channel's
    FTM delay, and (if configured) Gaussian timing jitter.  Deterministic
    for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    alpha = db_to_transmittance(channel.loss_db)
    keep = rng.random(len(photons)) < alpha
    t = photons.time_ps[keep].astype(np.float64, copy=True)
    t += channel.propagation_delay_ps
    if channel.ftm_delay_ps > 0.0:
        t += photons.channel[keep] * channel.ftm_delay_ps
    if channel.extra_jitter_ps > 0.0:
        t += rng.normal(0.0, channel.extra_jitter_ps, size=t.size)
    return PhotonBatch(
        t,
        photons.wavelength_nm[keep],
        photons.channel[keep],
        photons.truth_channel[keep],
    )
