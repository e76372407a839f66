import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qecchi.analysis import (
    FIT_STRENGTHS,
    FitError,
    LeadingOrderFit,
    MetricSeries,
    approximation_family,
    chi_entry_fits,
    find_threshold,
    fit_leading_order,
    metric_series,
    metric_value,
    model_family,
    per_state_leading_stats,
    physical_chi,
    pseudo_threshold,
    scaling_exponent_report,
)
from qecchi.qec import build_code

X = FIT_STRENGTHS


@given(
    st.integers(1, 5),
    st.floats(0.05, 50).map(float) | st.floats(-50, -0.05).map(float),
    st.floats(-30, 30),
    st.floats(-300, 300),
)
@settings(max_examples=60)
def test_fit_recovers_polynomial_leading_order(degree, c0, c1, c2):
    y = X**degree * (c0 + c1 * X + c2 * X**2)
    f = fit_leading_order((X, y))
    assert f.degree == degree
    assert f.coefficient == pytest.approx(c0, rel=1e-8)
    assert f.accepted
    np.testing.assert_allclose(f(X), y, rtol=1e-8)


@pytest.mark.parametrize("func,degree,coeff", [(np.sin, 1, 1.0), (lambda x: 1 - np.cos(x), 2, 0.5), (lambda x: np.sin(x / 2) ** 4, 4, 1 / 16)])
def test_fit_of_analytic_functions(func, degree, coeff):
    # 1 - cos(x) loses about 8 digits to cancellation at x = 1e-4
    f = fit_leading_order((X, func(X)))
    assert (f.degree, f.coefficient) == (degree, pytest.approx(coeff, rel=1e-7))


def test_fit_rejects_noise():
    rng = np.random.default_rng(0)
    y = X**2 * (1 + 0.1 * rng.normal(size=len(X)))
    with pytest.raises(FitError) as info:
        fit_leading_order((X, y))
    assert isinstance(info.value.best, LeadingOrderFit)
    assert not fit_leading_order((X, y), require=False).accepted


def test_fit_needs_three_points_and_positive_degrees():
    with pytest.raises(ValueError):
        fit_leading_order(([1e-3, 1e-2], [1.0, 2.0]))
    with pytest.raises(ValueError):
        fit_leading_order((X, X), candidate_degrees=[0, 1])


def test_zero_series_fits_to_zero():
    f = fit_leading_order((X, np.zeros_like(X)))
    assert f.coefficient == 0


@pytest.mark.parametrize(
    "strengths,values,level",
    [([1e-3, 1e-3, 1e-2], [1, 2, 3], "physical"), ([-1e-3, 1e-3, 1e-2], [1, 2, 3], "physical"),
     ([1e-3, 1e-2], [1.0], "physical"), ([1e-3, 1e-2], [1.0, 2.0], "code")],
)
def test_metric_series_validation(strengths, values, level):
    with pytest.raises(ValueError):
        MetricSeries(np.array(strengths), np.array(values, dtype=float), level=level)


def test_chi_entry_fits_marks_imaginary_entries():
    fits = chi_entry_fits(model_family("RZ"))
    assert fits[(0, 3)].coefficient == pytest.approx(1j, rel=1e-9)
    assert fits[(3, 0)].coefficient == pytest.approx(-1j, rel=1e-9)
    assert fits[(3, 3)].coefficient == pytest.approx(0.5, rel=1e-9)
    assert fits[(0, 3)].to_dict()["coefficient"] == [0.0, pytest.approx(1.0, rel=1e-9)]


@pytest.mark.parametrize("metric", ["error_rate", "trace_distance", "diamond"])
def test_metric_value_for_depolarizing(metric):
    assert metric_value(physical_chi("DC", 0.03), metric) == pytest.approx(0.03 if metric == "diamond" else 0.02, rel=1e-7)


def test_metric_value_unknown():
    with pytest.raises(ValueError):
        metric_value(physical_chi("DC", 0.03), "fidelity")


def test_per_state_stats_of_depolarizing_have_no_spread():
    st_ = per_state_leading_stats(model_family("DC"), "trace_distance")
    assert st_.degree == 1 and st_.mean == pytest.approx(2 / 3, rel=1e-9) and st_.std < 1e-12


def test_per_state_stats_of_damping():
    st_ = per_state_leading_stats(model_family("ADC"), "error_rate")
    # mean over the sphere of the per-state coefficient equals the exact average r = gamma/3
    assert st_.mean == pytest.approx(1 / 3, rel=1e-3) and st_.n_states == 150


def test_per_state_stats_reject_diamond():
    with pytest.raises(ValueError):
        per_state_leading_stats(model_family("DC"), "diamond")


def _series(values, level="physical", strengths=None):
    s = np.geomspace(0.01, 1, len(values)) if strengths is None else strengths
    return MetricSeries(s, np.asarray(values, dtype=float), "error_rate", level)


S = np.geomspace(1e-3, 0.9, 12)


def test_threshold_of_quadratic_against_linear():
    # logical 4 x^2 meets physical x at x = 1/4
    phys = MetricSeries(S, S, "error_rate", "physical", evaluate=lambda x: x)
    logi = MetricSeries(S, 4 * S**2, "error_rate", "logical", evaluate=lambda x: 4 * x**2)
    res = pseudo_threshold(phys, logi, curve="exact")
    assert res.status == "crossing" and res.threshold_strength == pytest.approx(0.25, rel=1e-5)
    # without evaluate callables the crossing of the log-linear interpolants is reported
    res = pseudo_threshold(_series(S, strengths=S), _series(4 * S**2, "logical", S), curve="exact")
    assert res.bracket[0] < 0.25 < S[np.searchsorted(S, 0.25)]
    res = pseudo_threshold(_series(S, strengths=S), _series(4 * S**2, "logical", S), curve="fit")
    assert res.threshold_strength == pytest.approx(0.25, rel=1e-6)


def test_threshold_statuses():
    phys = _series(S, strengths=S)
    assert pseudo_threshold(phys, _series(2 * S, "logical", S)).status == "none"
    assert pseudo_threshold(phys, _series(0.5 * S, "logical", S), curve="exact").status == "beyond_domain"
    assert pseudo_threshold(phys, _series(S, "logical", S)).status == "degenerate"
    wiggle = S * (1 + 0.5 * np.sin(12 * np.log(S)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert pseudo_threshold(phys, _series(wiggle, "logical", S), curve="exact").status in ("multiple", "none")


def test_threshold_input_checks():
    phys = _series(S, strengths=S)
    other = MetricSeries(S, S, "diamond", "logical")
    with pytest.raises(ValueError):
        pseudo_threshold(phys, other)
    with pytest.raises(ValueError):
        pseudo_threshold(phys, _series(S[:-1], "logical", S[:-1]))
    with pytest.raises(ValueError):
        pseudo_threshold(phys, _series(S, "logical", S), curve="spline")


@pytest.mark.parametrize("curve", ["fit", "exact"])
def test_bitflip_threshold_both_curves(curve):
    res = find_threshold("flip", build_code("bitflip3"), "error_rate", curve=curve)
    assert res.threshold_strength == pytest.approx(0.5, abs=1e-6)
    assert res.to_dict()["mode"] == "exact"


def test_scaling_report_for_unitary_noise():
    rep = scaling_exponent_report(model_family("RH"))
    assert rep.exponent == pytest.approx(0.5, abs=1e-3)
    rep = scaling_exponent_report(model_family("DC"))
    assert rep.exponent == pytest.approx(1.0, abs=1e-6)
    np.testing.assert_allclose(rep.ratios, 1.5, rtol=1e-6)  # D = p, r = 2p/3


def test_approximation_family_is_refitted_per_strength():
    fam = approximation_family("ADC", "PCa")
    for s in (1e-3, 1e-2):
        np.testing.assert_allclose(fam(s), np.diag(np.diag(physical_chi("ADC", s))), atol=1e-14)


def test_metric_series_evaluate_recomputes():
    series = metric_series(model_family("DC"), "error_rate", [1e-3, 1e-2, 1e-1])
    assert series.evaluate(0.3) == pytest.approx(0.2)
    assert series.to_rows()[0] == (1e-3, pytest.approx(2e-3 / 3))
