"""Metric chain: CAR -> visibility -> QBER -> entropy -> key rate."""

import math

import pytest

from qnetsim.metrics import (
    MetricsRecord,
    QkdParams,
    analytic_car,
    binary_entropy,
    metrics_from_car,
    mux_car,
    qber,
    skr,
    visibility,
)


def test_analytic_car_pure_pair_source():
    # singles carry only pair flux: CAR collapses to 1 + 1/mu
    assert analytic_car(0.1, 0.1, 0.1, 0.01, 0.01) == pytest.approx(11.0)
    assert analytic_car(0.01, 1.0, 1.0, 0.01, 0.01) == pytest.approx(101.0)


def test_analytic_car_with_extra_singles():
    # doubling background singles on one arm halves CAR - 1
    base = analytic_car(0.1, 0.5, 0.5, 0.05, 0.05) - 1.0
    noisy = analytic_car(0.1, 0.5, 0.5, 0.10, 0.05) - 1.0
    assert noisy == pytest.approx(base / 2.0)


def test_analytic_car_rejects_zero_singles():
    with pytest.raises(ValueError):
        analytic_car(0.1, 0.5, 0.5, 0.0, 0.05)


def test_mux_car_linear_improvement():
    for car1 in (1.5, 2.0, 3.5, 11.0):
        for n in range(1, 9):
            assert mux_car(car1, n) - 1.0 == pytest.approx(
                n * (car1 - 1.0), rel=1e-14
            )


def test_mux_car_identity_at_one_channel():
    assert mux_car(7.3, 1) == 7.3


def test_mux_car_penalty_scales_slope():
    # a sub-unity penalty models imperfect isolation between channels
    assert mux_car(11.0, 2, penalty=1.91 / 2.0) == pytest.approx(
        1.0 + 1.91 * 10.0
    )


def test_mux_car_validation():
    with pytest.raises(ValueError):
        mux_car(0.5, 2)
    with pytest.raises(ValueError):
        mux_car(2.0, 0)
    with pytest.raises(TypeError):
        mux_car(2.0, 2.5)
    with pytest.raises(TypeError):
        mux_car(2.0, True)
    with pytest.raises(ValueError):
        mux_car(2.0, 2, penalty=0.0)


def test_visibility_reference_points():
    assert visibility(2.0).value == 0.0
    assert visibility(math.inf).value == 1.0
    v = visibility(11.0)
    assert v.value == pytest.approx(0.9)
    assert not v.clamped


def test_visibility_clamps_below_two():
    v = visibility(1.5)
    assert v.value == 0.0
    assert v.clamped


def test_visibility_rejects_car_at_or_below_one():
    with pytest.raises(ValueError):
        visibility(1.0)
    with pytest.raises(ValueError):
        visibility(0.5)


def test_qber_is_half_of_one_minus_visibility():
    assert qber(0.0) == 0.5
    assert qber(1.0) == 0.0
    assert qber(0.9) == pytest.approx(0.05)


def test_binary_entropy_endpoints_and_symmetry():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.11) == pytest.approx(binary_entropy(0.89))


def test_binary_entropy_rejects_outside_unit_interval():
    with pytest.raises(ValueError):
        binary_entropy(-0.01)
    with pytest.raises(ValueError):
        binary_entropy(1.01)


def test_skr_positive_region():
    params = QkdParams()
    rate = skr(params, gain=1e-3, qber_value=0.02)
    expected = 0.5 * 1e-3 * (1.0 - 2.11 * binary_entropy(0.02))
    assert rate.clamped == pytest.approx(expected)
    assert rate.raw == rate.clamped


def test_skr_clamps_negative_rates():
    params = QkdParams()
    rate = skr(params, gain=1e-3, qber_value=0.3)
    assert rate.raw < 0.0
    assert rate.clamped == 0.0


def test_skr_zero_crossing_matches_entropy_root():
    # independently locate the root of 1 = (1 + f_e) h2(x) by bisection
    params = QkdParams()
    target = 1.0 / (1.0 + params.f_e)
    lo, hi = 1e-6, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < target:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    assert root == pytest.approx(0.10156393903086847, abs=1e-9)
    assert abs(root - 0.1016) <= 5e-4
    eps = 1e-6
    assert skr(params, 1.0, root - eps).raw > 0.0
    assert skr(params, 1.0, root + eps).raw < 0.0


def test_qkd_params_validation():
    with pytest.raises(ValueError):
        QkdParams(q=0.0)
    with pytest.raises(ValueError):
        QkdParams(f_e=0.9)


def test_metrics_from_car_full_chain():
    rec = metrics_from_car(11.0, 0.5, gain=2e-4, rep_rate_hz=80e6)
    assert isinstance(rec, MetricsRecord)
    assert rec.visibility == pytest.approx(0.9)
    assert rec.qber == pytest.approx(0.05)
    assert rec.skr_per_second == pytest.approx(rec.skr_per_pulse * 80e6)
    assert rec.flag == ""


def test_metrics_from_car_flags():
    assert metrics_from_car(float("nan"), 0.0, 1e-4, 8e7).flag == "undefined_car"
    inf = metrics_from_car(float("inf"), 0.0, 1e-4, 8e7)
    assert inf.flag == "infinite_car"
    assert inf.visibility == 1.0
    low = metrics_from_car(0.8, 0.1, 1e-4, 8e7)
    assert low.flag == "car_not_above_one"
    assert low.qber == 0.5
    clamped = metrics_from_car(1.7, 0.1, 1e-4, 8e7)
    assert clamped.flag == "clamped_visibility"
    assert clamped.visibility == 0.0
