import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qecchi.channels import ChannelModel, chi_from_kraus, chi_of_model, random_channel
from qecchi.metrics import choi_deviation, diamond_distance
from qecchi.sdp import SDPSolverError, diamond_from_choi, hermitian_basis, solve_sdp


def _random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


@pytest.mark.parametrize("d", [2, 3, 5])
def test_min_eigenvalue_program(d, rng):
    # min <C, X> over density matrices X is the smallest eigenvalue of C
    c = _random_hermitian(rng, d)
    res = solve_sdp(c, [np.eye(d)], [1.0])
    assert res.converged
    assert res.primal_value == pytest.approx(np.linalg.eigvalsh(c)[0], abs=1e-8)
    assert res.gap < 1e-8


def test_program_with_two_constraints(rng):
    # min <C, X> with tr X = 1 and X_00 = 0.25
    c = _random_hermitian(rng, 3)
    e00 = np.zeros((3, 3))
    e00[0, 0] = 1
    res = solve_sdp(c, [np.eye(3), e00], [1.0, 0.25])
    assert res.converged and res.x[0, 0].real == pytest.approx(0.25, abs=1e-8)
    assert np.linalg.eigvalsh(res.x)[0] > -1e-9


@pytest.mark.parametrize("d", [2, 4])
def test_hermitian_basis_is_orthonormal(d):
    b = hermitian_basis(d)
    assert b.shape == (d * d, d, d)
    gram = np.real(np.einsum("kij,lij->kl", b.conj(), b))
    np.testing.assert_allclose(gram, np.eye(d * d), atol=1e-14)
    np.testing.assert_allclose(b, np.conj(np.transpose(b, (0, 2, 1))), atol=1e-15)


def test_zero_map_has_zero_norm():
    res = diamond_from_choi(np.zeros((4, 4)))
    assert res.value == 0 and res.gap == 0


@pytest.mark.parametrize("theta", [1e-4, 1e-2, 0.5, 2.0, 3.0])
@pytest.mark.parametrize("tag", ["RZ", "RH"])
def test_unitary_closed_form(tag, theta):
    value, gap = diamond_distance(chi_of_model(ChannelModel(tag, theta)))
    assert value == pytest.approx(oracles.unitary_diamond(theta), rel=1e-7, abs=1e-12)
    assert gap < 1e-7


@pytest.mark.parametrize("p", [1e-4, 0.01, 0.5, 1.0])
def test_polarizer_and_depolarizing_closed_forms(p):
    assert diamond_distance(chi_of_model(ChannelModel("PolPi8", p)))[0] == pytest.approx(p, rel=1e-7)
    assert diamond_distance(chi_of_model(ChannelModel("DC", p)))[0] == pytest.approx(p, rel=1e-7)


@given(st.integers(0, 10_000), st.integers(1, 4))
@settings(max_examples=25, deadline=None)
def test_diamond_bounds(seed, n_kraus):
    # D_tr(single state) <= D_diamond <= 1, and the certificate is tight
    chi = chi_from_kraus(random_channel(np.random.default_rng(seed), n_kraus))
    value, gap = diamond_distance(chi)
    assert gap < 1e-7
    assert value <= 1 + 1e-9
    pts = oracles.sphere_points(20)
    assert max(oracles.per_state_trace_distance(chi, n) for n in pts) <= value + 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_against_cvxpy_watrous_program(seed):
    pytest.importorskip("cvxpy")
    chi = chi_from_kraus(random_channel(np.random.default_rng(100 + seed), 1 + seed % 3))
    assert diamond_distance(chi)[0] == pytest.approx(oracles.watrous_diamond(chi), abs=1e-6)


def test_choi_deviation_is_traceless_on_output():
    chi = chi_from_kraus(random_channel(np.random.default_rng(1), 2))
    j = choi_deviation(chi)
    # input factor first: tracing out the output leaves zero for a difference of channels
    red = np.einsum("iaja->ij", j.reshape(2, 2, 2, 2))
    np.testing.assert_allclose(red, 0, atol=1e-14)


def test_unreachable_gap_raises():
    j = choi_deviation(chi_of_model(ChannelModel("RZ", 0.1)))
    with pytest.raises(SDPSolverError) as info:
        diamond_from_choi(j, gap_tol=-1.0)
    assert info.value.gap >= 0
