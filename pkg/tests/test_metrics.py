import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qecchi.channels import ChannelModel, chi_from_kraus, chi_of_model, kraus_of_model, random_channel
from qecchi.core import fibonacci_sphere, state_from_bloch
from qecchi.metrics import (
    MetricReport,
    as_chi,
    avg_error_rate,
    avg_trace_distance,
    chi_deviation,
    deviation_transfer,
    error_rate_state,
    error_rate_states,
    metric_report,
    trace_distance_state,
    trace_distance_states,
)


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_per_state_metrics_match_direct_action(seed):
    rng = np.random.default_rng(seed)
    chi = chi_from_kraus(random_channel(rng, 2))
    pts = oracles.sphere_points(7)
    np.testing.assert_allclose(error_rate_states(chi, pts), [oracles.per_state_infidelity(chi, n) for n in pts], atol=1e-13)
    np.testing.assert_allclose(trace_distance_states(chi, pts), [oracles.per_state_trace_distance(chi, n) for n in pts], atol=1e-13)


def test_single_state_helpers_agree_with_batched():
    chi = chi_of_model(ChannelModel("ADC", 0.2))
    n = np.array([0.6, 0.0, 0.8])
    psi = state_from_bloch(n)
    assert error_rate_state(chi, psi) == pytest.approx(error_rate_states(chi, n[None])[0])
    assert trace_distance_state(chi, psi) == pytest.approx(trace_distance_states(chi, n[None])[0])


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_avg_error_rate_is_the_sphere_average(seed):
    chi = chi_from_kraus(random_channel(np.random.default_rng(seed), 3))
    octahedron = np.vstack([np.eye(3), -np.eye(3)])
    assert avg_error_rate(chi, None)[0] == pytest.approx(np.mean(error_rate_states(chi, octahedron)), abs=1e-14)


@pytest.mark.parametrize("tag,s,r", [("DC", 0.3, 0.2), ("ADC", 0.3, 0.3 / 3 + (1 - np.sqrt(0.7)) ** 2 / 6), ("RZ", 0.2, np.sin(0.1) ** 2 * 2 / 3)])
def test_avg_error_rate_closed_forms(tag, s, r):
    assert avg_error_rate(chi_of_model(ChannelModel(tag, s)))[0] == pytest.approx(r, rel=1e-12)


def test_depolarizing_is_state_independent():
    chi = chi_of_model(ChannelModel("DC", 0.03))
    r, r_std = avg_error_rate(chi)
    d, d_std = avg_trace_distance(chi)
    assert r == pytest.approx(0.02) and d == pytest.approx(0.02)
    assert r_std < 1e-12 and d_std < 1e-12


def test_avg_trace_distance_accepts_explicit_states():
    chi = chi_of_model(ChannelModel("RZ", 0.1))
    poles = np.array([[0, 0, 1.0], [0, 0, -1.0]])
    assert avg_trace_distance(chi, poles) == (pytest.approx(0.0, abs=1e-15), pytest.approx(0.0, abs=1e-15))
    with pytest.raises(ValueError):
        avg_trace_distance(chi, np.zeros((0, 3)))


def test_sample_std_uses_n_minus_one():
    chi = chi_of_model(ChannelModel("RZ", 0.1))
    pts = fibonacci_sphere(150)
    vals = trace_distance_states(chi, pts)
    assert avg_trace_distance(chi, 150)[1] == pytest.approx(np.std(vals, ddof=1))


def test_chi_deviation_restores_trace_condition():
    chi = chi_of_model(ChannelModel("ADC", 1e-9))
    dev = chi_deviation(chi)
    assert dev[0, 0].real == pytest.approx(-(1e-9 + 2 * ((1 - np.sqrt(1 - 1e-9)) / 2) ** 2), rel=1e-9)


def test_deviation_transfer_of_identity_is_zero():
    np.testing.assert_allclose(deviation_transfer(chi_of_model(ChannelModel("Identity"))), 0, atol=1e-15)


def test_as_chi_accepts_kraus_and_rejects_bad_shapes():
    k = kraus_of_model(ChannelModel("RH", 0.2))
    np.testing.assert_allclose(as_chi(k), chi_from_kraus(k))
    with pytest.raises(ValueError):
        as_chi(np.eye(3))


def test_metric_report_fields():
    rep = metric_report(chi_of_model(ChannelModel("RZ", 0.01)))
    assert rep.avg_error_rate == pytest.approx(2 * np.sin(0.005) ** 2 / 3, rel=1e-9)
    assert rep.diamond == pytest.approx(np.sin(0.005), rel=1e-7)
    assert rep.n_states_used == 150 and rep.method == "sampled"
    d = rep.to_dict()
    assert set(d) >= {"avg_error_rate", "error_rate_std", "avg_trace_distance", "trace_distance_std", "diamond"}
    with pytest.raises(ValueError):
        MetricReport(-1.0, 0, 0, 0, 0, 0, 150, "sampled")


def test_metric_ordering_for_unitary_noise():
    # r <= D_tr <= D_diamond on average for any channel close to the identity
    rep = metric_report(chi_of_model(ChannelModel("RH", 0.05)))
    assert rep.avg_error_rate <= rep.avg_trace_distance <= rep.diamond
