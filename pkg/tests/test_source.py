"""Pair sampling statistics and the joint spectral intensity model."""

import numpy as np
import pytest

from qnetsim.source import (
    JsiGrid,
    SourceSpec,
    compute_jsi,
    crosstalk_matrix,
    jsi_channel_bounds,
    make_pump_channels,
    mean_pairs_per_pulse,
    sample_pairs,
    to_photons,
)
from qnetsim.topology import default_channel_pairs


def test_source_spec_validation():
    with pytest.raises(ValueError):
        SourceSpec(brightness_pairs_per_s_per_mw=-1.0)
    with pytest.raises(ValueError):
        SourceSpec(rep_rate_hz=0.0)
    with pytest.raises(ValueError):
        SourceSpec(n_channels=0)
    with pytest.raises(ValueError):
        SourceSpec(idler_center_nm=700.0)
    with pytest.raises(ValueError):
        SourceSpec(crosstalk_db=1.0)
    with pytest.raises(ValueError):
        SourceSpec(crosstalk_db=-2.0)  # leak probability would reach 1


def test_pulse_period_is_integer_ps():
    assert SourceSpec(rep_rate_hz=80e6).pulse_period_ps == 12_500
    assert SourceSpec(rep_rate_hz=50e6).pulse_period_ps == 20_000


def test_mean_pairs_per_pulse():
    spec = SourceSpec(
        brightness_pairs_per_s_per_mw=8e7, pump_power_mw=0.1, rep_rate_hz=80e6
    )
    assert mean_pairs_per_pulse(spec) == pytest.approx(0.1)


def test_sample_pairs_poisson_statistics():
    spec = SourceSpec(
        brightness_pairs_per_s_per_mw=8e7, pump_power_mw=0.1, rep_rate_hz=80e6
    )
    n_pulses = 200_000
    pairs = sample_pairs(spec, n_pulses, seed=11)
    expected = 0.1 * n_pulses
    assert abs(len(pairs) - expected) < 4.0 * np.sqrt(expected)
    counts = np.bincount(pairs.channel, minlength=4)
    for c in counts:
        assert abs(c - len(pairs) / 4) < 4.0 * np.sqrt(len(pairs) * 0.25 * 0.75)


def test_sample_pairs_emission_grid():
    spec = SourceSpec(rep_rate_hz=80e6)
    pairs = sample_pairs(spec, 50_000, seed=3, start_time_ps=100)
    assert np.array_equal(pairs.time_ps, 100 + pairs.pulse_index * 12_500)
    assert np.all(np.diff(pairs.time_ps) >= 0)
    assert np.array_equal(pairs.idler_channel, pairs.channel)


def test_sample_pairs_deterministic():
    spec = SourceSpec()
    a = sample_pairs(spec, 10_000, seed=42)
    b = sample_pairs(spec, 10_000, seed=42)
    assert np.array_equal(a.time_ps, b.time_ps)
    assert np.array_equal(a.channel, b.channel)


def test_sample_pairs_active_channels():
    spec = SourceSpec()
    pairs = sample_pairs(spec, 50_000, seed=5, active_channels=(0, 2, 0))
    assert set(np.unique(pairs.channel)) == {0, 2}
    with pytest.raises(ValueError):
        sample_pairs(spec, 100, seed=5, active_channels=())
    with pytest.raises(ValueError):
        sample_pairs(spec, 100, seed=5, active_channels=(4,))
    with pytest.raises(ValueError):
        sample_pairs(spec, -1, seed=5)


def test_crosstalk_hops_to_neighbours():
    spec = SourceSpec(
        brightness_pairs_per_s_per_mw=8e8, pump_power_mw=1.0, crosstalk_db=-10.0
    )
    pairs = sample_pairs(spec, 100_000, seed=9)
    hop = pairs.idler_channel - pairs.channel
    assert set(np.unique(hop)).issubset({-1, 0, 1})
    # edge channels can only leak inward
    assert np.all(hop[pairs.channel == 0] >= 0)
    assert np.all(hop[pairs.channel == 3] <= 0)
    # interior channels leak both ways with probability p each
    interior = np.isin(pairs.channel, (1, 2))
    rate = np.mean(hop[interior] != 0)
    n = interior.sum()
    assert abs(rate - 0.2) < 4.0 * np.sqrt(0.2 * 0.8 / n)


def test_to_photons_wavelength_lookup():
    spec = SourceSpec(crosstalk_db=-10.0)
    pairs = sample_pairs(spec, 50_000, seed=21)
    signal, idler = to_photons(pairs)
    table = default_channel_pairs()
    assert np.allclose(signal.wavelength_nm, [table[c].signal_nm for c in pairs.channel])
    assert np.allclose(idler.wavelength_nm, [table[c].idler_nm for c in pairs.channel])
    # truth follows the pair, routing follows the demux exit port
    assert np.array_equal(signal.truth_channel, pairs.channel)
    assert np.array_equal(idler.truth_channel, pairs.channel)
    assert np.array_equal(idler.channel, pairs.idler_channel)
    assert np.array_equal(signal.time_ps, pairs.time_ps.astype(float))


def test_to_photons_rejects_out_of_table_channel():
    spec = SourceSpec(n_channels=4)
    pairs = sample_pairs(spec, 20_000, seed=2)
    with pytest.raises(ValueError):
        to_photons(pairs, pair_table=default_channel_pairs()[:2])


def test_make_pump_channels_layout():
    channels = make_pump_channels()
    assert len(channels) == 4
    centers = [c for c, _ in channels]
    assert all(w == 0.25 for _, w in channels)
    assert np.allclose(np.diff(centers), 0.5)
    assert np.mean(centers) == pytest.approx(521.4)
    with pytest.raises(ValueError):
        make_pump_channels(n_channels=0)
    with pytest.raises(ValueError):
        make_pump_channels(gap_nm=-0.1)


def test_compute_jsi_normalized_grid():
    jsi = compute_jsi(make_pump_channels(), phasematch_fwhm_nm=0.05, grid_resolution=128)
    assert jsi.intensity.shape == (128, 128)
    assert jsi.intensity.sum() == pytest.approx(1.0)
    assert np.all(jsi.intensity >= 0)
    assert np.all(np.diff(jsi.signal_axis_nm) > 0)
    assert np.all(np.diff(jsi.idler_axis_nm) > 0)


def test_compute_jsi_validation():
    with pytest.raises(ValueError):
        compute_jsi(make_pump_channels(), phasematch_fwhm_nm=0.0)
    with pytest.raises(ValueError):
        compute_jsi(make_pump_channels(), phasematch_fwhm_nm=0.05, grid_resolution=32)
    with pytest.raises(ValueError):
        compute_jsi(((521.0, 0.5), (521.2, 0.5)), phasematch_fwhm_nm=0.05)


def test_jsi_grid_shape_check():
    with pytest.raises(ValueError):
        JsiGrid(
            signal_axis_nm=np.arange(3.0),
            idler_axis_nm=np.arange(4.0),
            intensity=np.zeros((3, 3)),
            pump_channels=((521.4, 0.25),),
        )


def test_jsi_channel_bounds_track_energy_conservation():
    channels = make_pump_channels()
    signal_bands, idler_bands = jsi_channel_bounds(channels)
    assert len(signal_bands) == len(idler_bands) == 4
    for bands, lo, hi in ((signal_bands, 780.0, 795.0), (idler_bands, 1500.0, 1600.0)):
        for b_lo, b_hi in bands:
            assert lo < b_lo < b_hi < hi
        for (_, hi1), (lo2, _) in zip(bands, bands[1:]):
            assert hi1 <= lo2


def test_single_channel_has_no_crosstalk_entries():
    channels = make_pump_channels(n_channels=1)
    jsi = compute_jsi(channels, phasematch_fwhm_nm=0.05, grid_resolution=128)
    s, i = jsi_channel_bounds(channels)
    matrix = crosstalk_matrix(jsi, s, i)
    assert matrix.shape == (1, 1)
    assert matrix[0, 0] == 0.0


def test_channel_isolation_improves_with_gap():
    def max_offdiag(gap_nm, fwhm=0.05):
        channels = make_pump_channels(gap_nm=gap_nm)
        jsi = compute_jsi(channels, phasematch_fwhm_nm=fwhm, grid_resolution=192)
        s, i = jsi_channel_bounds(channels)
        m = crosstalk_matrix(jsi, s, i)
        off = m[~np.eye(len(m), dtype=bool)]
        return float(off.max())

    designed = max_offdiag(0.25)
    packed = max_offdiag(0.0)
    spread = max_offdiag(2.5)
    assert designed < -30.0
    assert packed > designed
    assert spread < -60.0


def test_crosstalk_matrix_validation():
    jsi = compute_jsi(make_pump_channels(), phasematch_fwhm_nm=0.05, grid_resolution=128)
    s, i = jsi_channel_bounds(make_pump_channels())
    matrix = crosstalk_matrix(jsi, s, i)
    assert np.allclose(np.diag(matrix), 0.0)
    with pytest.raises(ValueError):
        crosstalk_matrix(jsi, s[:2], i)
    with pytest.raises(ValueError):
        crosstalk_matrix(jsi, ((781.0, 780.0),), ((1540.0, 1541.0),))
    overlapping = ((781.0, 785.0), (784.0, 788.0))
    with pytest.raises(ValueError):
        crosstalk_matrix(jsi, overlapping, i[:2])
