import numpy as np
import pytest

import oracles
from qecchi.approximator import VARIANTS, ApproximationResult, approximate, depolarizing_fit, verify_honesty
from qecchi.channels import ChannelModel, chi_from_kraus, chi_of_model, twirl

TARGETS = [("ADC", 1e-3), ("ADC", 1e-2), ("PolPi8", 1e-2), ("RZ", 1e-2), ("RH", 1e-3), ("RH", 1e-2)]


def _target(tag, s):
    return chi_of_model(ChannelModel(tag, s))


@pytest.mark.parametrize("tag,s", TARGETS)
def test_pca_is_the_twirl(tag, s):
    t = _target(tag, s)
    res = approximate(t, "PCa")
    np.testing.assert_allclose(res.chi, twirl(t), atol=1e-14)
    assert res.hs_distance == pytest.approx(np.linalg.norm(t - twirl(t)), rel=1e-9)


@pytest.mark.parametrize("tag,s", TARGETS)
@pytest.mark.parametrize("variant", VARIANTS)
def test_results_are_valid_mixtures(tag, s, variant):
    res = approximate(_target(tag, s), variant)
    assert np.all(res.weights >= 0) and res.weights.sum() == pytest.approx(1, abs=1e-12)
    np.testing.assert_allclose(chi_from_kraus(res.channel()), res.chi, atol=1e-12)
    assert res.hs_distance == pytest.approx(np.linalg.norm(res.chi - _target(tag, s)), rel=1e-6, abs=1e-15)


@pytest.mark.parametrize("tag,s", TARGETS)
@pytest.mark.parametrize("variant", ["PCw", "CMCw"])
def test_constrained_fits_are_honest_on_an_independent_lattice(tag, s, variant):
    t = _target(tag, s)
    res = approximate(t, variant)
    assert res.honest and res.honesty_margin >= -1e-8
    # honesty is enforced on the lattice only; states between lattice points may fall
    # short by a discretization-sized amount, far below the error strength itself
    assert oracles.honesty_margin(res.chi, t, 10_000) >= -1e-4 * s


@pytest.mark.parametrize("tag,s", TARGETS)
def test_honesty_margin_matches_oracle_on_same_states(tag, s):
    t = _target(tag, s)
    approx = approximate(t, "PCa").chi
    assert verify_honesty(approx, t, 500) == pytest.approx(_margin_on_package_lattice(approx, t, 500), abs=1e-14)


def _margin_on_package_lattice(a, t, n):
    from qecchi.core import fibonacci_sphere

    pts = fibonacci_sphere(n)
    return min(oracles.per_state_trace_distance(a, p) - oracles.per_state_trace_distance(t, p) for p in pts)


@pytest.mark.parametrize("tag,s", [("ADC", 1e-2), ("PolPi8", 1e-2), ("RZ", 1e-2), ("RH", 1e-2)])
def test_pcw_matches_generic_optimizer(tag, s):
    t = _target(tag, s)
    res = approximate(t, "PCw")
    diag, dist = oracles.honest_pauli_slsqp(t, s)
    # same optimum up to the difference between the two state lattices
    assert res.hs_distance == pytest.approx(dist, rel=1e-4)
    np.testing.assert_allclose(np.real(np.diag(res.chi))[1:], diag, atol=5e-3 * s)


@pytest.mark.parametrize("tag,s", TARGETS)
def test_larger_member_set_fits_better(tag, s):
    t = _target(tag, s)
    assert approximate(t, "CMCa").hs_distance <= approximate(t, "PCa").hs_distance * (1 + 1e-9)
    assert approximate(t, "CMCw").hs_distance <= approximate(t, "PCw").hs_distance * (1 + 1e-9)


@pytest.mark.parametrize("tag,s", [("ADC", 1e-3), ("RZ", 1e-2)])
def test_pca_is_dishonest_for_damping_and_rotation(tag, s):
    res = approximate(_target(tag, s), "PCa")
    assert not res.honest and res.honesty_margin < 0


def test_pauli_target_is_reproduced_exactly():
    t = chi_of_model(ChannelModel("Pauli", extra=(0.01, 0.02, 0.03)))
    for variant in ("PCa", "PCw"):
        res = approximate(t, variant)
        assert res.hs_distance < 1e-12 and res.honest


@pytest.mark.parametrize("g", [1e-3, 1e-2, 0.2])
def test_depolarizing_fit_closed_form(g):
    res = depolarizing_fit(_target("ADC", g))
    p = oracles.dc_of_adc(g)
    np.testing.assert_allclose(res.weights, [1 - p, p / 3, p / 3, p / 3], atol=1e-14)
    assert res.variant == "DC"


def test_result_validation():
    chi = np.diag([2.0, 0, 0, 0]).astype(complex)
    ids = ("I", "X", "Y", "Z")
    with pytest.raises(ValueError):
        ApproximationResult("PCa", ids, np.array([0.5, 0.6, 0, 0]), chi, 0.0, False, 0.0)
    with pytest.raises(ValueError):
        ApproximationResult("XYZ", ids, np.array([1.0, 0, 0, 0]), chi, 0.0, False, 0.0)
    with pytest.raises(ValueError):
        ApproximationResult("PCw", ids, np.array([1.0, 0, 0, 0]), chi, 0.0, True, -1e-3)


def test_unknown_variant():
    with pytest.raises(ValueError):
        approximate(_target("ADC", 0.1), "PTA")


def test_to_dict_lists_every_member():
    res = approximate(_target("RZ", 1e-2), "CMCw")
    d = res.to_dict()
    assert d["variant"] == "CMCw" and len(d["weights"]) == 30
    assert sum(w["weight"] for w in d["weights"]) == pytest.approx(1)
