"""Leading-order extraction, Bloch-sphere statistics and pseudo-thresholds.

Leading orders are found by fitting ``x^d (c0 + c1 x + ... + ck x^k)`` in
relative least squares for each candidate degree d. The chosen degree is the
one whose leading coefficient c0 is best determined, measured by the relative
variance Var(c0)/c0^2. The correction terms absorb the next orders, which are
otherwise large enough at strength 1e-2 to push a bare monomial fit past the
1e-7 relative-variance bar.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .approximator import approximate
from .channels import ChannelModel, chi_from_kraus, chi_of_model
from .core import fibonacci_sphere
from .metrics import (
    DEFAULT_STATES,
    avg_error_rate,
    avg_trace_distance,
    diamond_distance,
    error_rate_states,
    trace_distance_states,
)
from .qec import BITFLIP_NOISE, CodeSpec, bitflip_noise_model, logical_chi

FIT_STRENGTHS = np.geomspace(1e-4, 1e-2, 7)
PER_STATE_STRENGTHS = np.geomspace(1e-4, 1e-3, 3)
THRESHOLD_STRENGTHS = np.geomspace(1e-4, 0.3, 8)
DEFAULT_DEGREES = (1, 2, 3, 4, 5, 6)
RELATIVE_VARIANCE_BAR = 1e-7
METRICS = ("error_rate", "trace_distance", "diamond")

# Largest admissible strength per family, used when a threshold search has to widen its grid.
_DOMAIN_MAX = {"ADC": 1.0, "PolPi8": 1.0, "DC": 1.0, "RZ": 3.0, "RH": 3.0, "flip": 1.0, "rx": 3.0, "twirled_rx": 3.0}


class FitError(ValueError):
    def __init__(self, message: str, best: "LeadingOrderFit | None" = None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class LeadingOrderFit:
    degree: int
    coefficient: float | complex  # complex only for imaginary process-matrix entries
    total_variance: float
    relative_variance: float
    corrections: tuple[float, ...] = ()  # coefficients of x^(degree+1), x^(degree+2), ...

    @property
    def accepted(self) -> bool:
        return self.relative_variance < RELATIVE_VARIANCE_BAR

    def __call__(self, x):
        """The fitted curve x^d (c0 + c1 x + ...)."""
        x = np.asarray(x, dtype=float)
        return x**self.degree * np.polyval(np.r_[self.corrections[::-1], self.coefficient], x)

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "coefficient": self.coefficient if np.isrealobj(self.coefficient) else [self.coefficient.real, self.coefficient.imag],
            "total_variance": self.total_variance,
            "relative_variance": self.relative_variance,
        }


@dataclass(frozen=True)
class MetricSeries:
    """Values of one metric over an increasing grid of error strengths.

    ``evaluate`` optionally recomputes the value at any strength; threshold
    refinement uses it instead of interpolating.
    """

    strengths: np.ndarray
    values: np.ndarray
    metric: str = "error_rate"
    level: str = "physical"
    evaluate: Callable[[float], float] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        s = np.asarray(self.strengths, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if s.ndim != 1 or s.shape != v.shape:
            raise ValueError("strengths and values must be 1-D arrays of the same length")
        if np.any(s <= 0) or np.any(np.diff(s) <= 0):
            raise ValueError("strengths must be positive and strictly increasing")
        if self.level not in ("physical", "logical"):
            raise ValueError(f"level must be 'physical' or 'logical', got {self.level!r}")
        object.__setattr__(self, "strengths", s)
        object.__setattr__(self, "values", v)

    def to_rows(self) -> list[tuple[float, float]]:
        return list(zip(self.strengths.tolist(), self.values.tolist()))


def _fit_degree(x: np.ndarray, y: np.ndarray, d: int, corrections: int) -> LeadingOrderFit:
    w = 1 / np.maximum(np.abs(y), np.finfo(float).tiny)
    a = x[:, None] ** (d + np.arange(corrections + 1)) * w[:, None]
    rhs = y * w
    # column scaling keeps the normal matrix well conditioned across decades of x
    col = np.linalg.norm(a, axis=0)
    coef, *_ = np.linalg.lstsq(a / col, rhs, rcond=None)
    resid = rhs - (a / col) @ coef
    dof = max(len(x) - corrections - 1, 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.pinv((a / col).T @ (a / col))
    c0 = coef[0] / col[0]
    var0 = cov[0, 0] / col[0] ** 2
    rel = var0 / c0**2 if c0 != 0 else np.inf
    return LeadingOrderFit(d, float(c0), sigma2, float(rel), tuple(float(c) for c in coef[1:] / col[1:]))


def fit_leading_order(
    series: MetricSeries | tuple[Sequence[float], Sequence[float]],
    candidate_degrees: Iterable[int] = DEFAULT_DEGREES,
    corrections: int = 2,
    require: bool = True,
) -> LeadingOrderFit:
    """Leading degree and coefficient of a series that behaves like c x^d as x -> 0.

    ``corrections`` higher-order terms are fitted alongside (capped so at least
    one residual degree of freedom remains). With ``require`` set, a FitError
    is raised when no candidate meets the relative-variance bar.
    """
    if isinstance(series, MetricSeries):
        x, y = series.strengths, series.values
    else:
        x, y = (np.asarray(v, dtype=float) for v in series)
    if len(x) < 3:
        raise ValueError("need at least 3 points for a leading-order fit")
    degrees = sorted(set(int(d) for d in candidate_degrees))
    if not degrees or degrees[0] < 1:
        raise ValueError("candidate degrees must be positive integers")
    if np.all(y == 0):
        return LeadingOrderFit(degrees[0], 0.0, 0.0, 0.0)
    k = max(0, min(corrections, len(x) - 2))
    fits = [_fit_degree(x, y, d, k) for d in degrees]
    best = min(fits, key=lambda f: (f.relative_variance, f.total_variance))
    if require and not best.accepted:
        raise FitError(
            f"no candidate degree reaches relative variance {RELATIVE_VARIANCE_BAR:g} "
            f"(best: degree {best.degree}, {best.relative_variance:.2e})",
            best,
        )
    return best


# --- channel families ---------------------------------------------------------

ChiFamily = Callable[[float], np.ndarray]


def physical_chi(tag: str, strength: float) -> np.ndarray:
    """Process matrix of a model tag or of one of the bit-flip families ``flip``, ``rx``, ``twirled_rx``."""
    if tag in BITFLIP_NOISE:
        return chi_from_kraus(bitflip_noise_model(tag, strength))
    return chi_of_model(ChannelModel(tag, strength))


def model_family(tag: str, code: CodeSpec | None = None) -> ChiFamily:
    """strength -> process matrix, physical (``code=None``) or logical under perfect EC."""
    if code is None:
        return lambda s: physical_chi(tag, s)
    return lambda s: logical_chi(code, physical_chi(tag, s))


def approximation_family(tag: str, variant: str, code: CodeSpec | None = None, **kwargs) -> ChiFamily:
    """strength -> process matrix of the approximation refitted at that strength."""
    def family(s: float) -> np.ndarray:
        chi = approximate(physical_chi(tag, s), variant, **kwargs).chi
        return chi if code is None else logical_chi(code, chi)

    return family


def metric_value(chi: np.ndarray, metric: str, n_states: int = DEFAULT_STATES) -> float:
    if metric == "error_rate":
        return avg_error_rate(chi, None)[0]
    if metric == "trace_distance":
        return avg_trace_distance(chi, n_states)[0]
    if metric == "diamond":
        return diamond_distance(chi)[0]
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def chi_entry_fits(
    family: ChiFamily,
    strengths: Sequence[float] = FIT_STRENGTHS,
    floor: float = 1e-13,
    **fit_kwargs,
) -> dict[tuple[int, int], LeadingOrderFit]:
    """Leading-order fit of every entry of the deviation chi - chi_identity.

    Real and imaginary parts are fitted separately; the returned coefficient
    of an entry carries a factor 1j when its imaginary part dominates. Entries
    whose magnitude stays below ``floor`` at the largest strength are skipped.
    """
    from .metrics import chi_deviation

    strengths = np.asarray(strengths, dtype=float)
    devs = np.array([chi_deviation(family(s)) for s in strengths])
    out = {}
    for i in range(4):
        for j in range(4):
            vals = devs[:, i, j]
            imaginary = np.max(np.abs(vals.imag)) > np.max(np.abs(vals.real))
            if np.max(np.abs(vals)) < floor * max(1.0, strengths[-1]):
                continue
            f = fit_leading_order((strengths, vals.imag if imaginary else vals.real), **fit_kwargs)
            if imaginary:
                f = replace(f, coefficient=1j * f.coefficient, corrections=tuple(1j * c for c in f.corrections))
            out[(i, j)] = f
    return out


def metric_series(
    family: ChiFamily,
    metric: str,
    strengths: Sequence[float],
    level: str = "physical",
    n_states: int = DEFAULT_STATES,
) -> MetricSeries:
    strengths = np.asarray(strengths, dtype=float)

    def evaluate(s: float) -> float:
        return metric_value(family(s), metric, n_states)

    values = np.array([evaluate(s) for s in strengths])
    return MetricSeries(strengths, values, metric, level, evaluate)


# --- per-state statistics ---------------------------------------------------------

@dataclass(frozen=True)
class PerStateStats:
    degree: int
    mean: float
    std: float
    n_states: int
    refitted: int  # states whose own best degree differed from the common one


def per_state_leading_stats(
    family: ChiFamily,
    metric: str,
    n_states: int = DEFAULT_STATES,
    strengths: Sequence[float] = PER_STATE_STRENGTHS,
    candidate_degrees: Iterable[int] = DEFAULT_DEGREES,
) -> PerStateStats:
    """Fit each state's metric curve, then average the leading coefficients.

    States are the Fibonacci lattice of ``n_states`` points. Every state is
    reported at the most common best degree so the coefficients are comparable.
    The standard deviation uses the sample (n - 1) normalization.
    """
    per_state = {"error_rate": error_rate_states, "trace_distance": trace_distance_states}.get(metric)
    if per_state is None:
        raise ValueError(f"per-state statistics need 'error_rate' or 'trace_distance', got {metric!r}")
    strengths = np.asarray(strengths, dtype=float)
    bloch = fibonacci_sphere(n_states)
    values = np.array([per_state(family(s), bloch) for s in strengths])  # (strengths, states)
    if np.all(values == 0):
        return PerStateStats(min(candidate_degrees), 0.0, 0.0, n_states, 0)
    fits = [fit_leading_order((strengths, values[:, k]), candidate_degrees, require=False) for k in range(n_states)]
    degrees = [f.degree for f in fits if f.coefficient != 0]
    common = max(set(degrees), key=degrees.count)
    refitted = 0
    coeffs = []
    for k, f in enumerate(fits):
        if f.degree != common and f.coefficient != 0:
            f = fit_leading_order((strengths, values[:, k]), [common], require=False)
            refitted += 1
        coeffs.append(f.coefficient)
    coeffs = np.array(coeffs)
    return PerStateStats(common, float(np.mean(coeffs)), float(np.std(coeffs, ddof=1)), n_states, refitted)


# --- pseudo-thresholds --------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdResult:
    """``threshold_strength`` is 0 when the logical curve lies above the physical one everywhere.

    ``status`` is one of: crossing, none (logical above physical), beyond_domain
    (logical below physical on the whole grid), degenerate (identical curves)
    or multiple (several crossings; the smallest is reported).
    """

    threshold_strength: float
    metric: str
    mode: str
    bracket: tuple[float, float] | None
    status: str

    def to_dict(self) -> dict:
        return {
            "threshold_strength": self.threshold_strength,
            "metric": self.metric,
            "mode": self.mode,
            "bracket": list(self.bracket) if self.bracket else None,
            "status": self.status,
        }


def _loglog_interp(series: MetricSeries) -> Callable[[float], float]:
    x = np.log(series.strengths)
    y = series.values

    def f(s: float) -> float:
        return float(np.interp(np.log(s), x, y))

    return f


THRESHOLD_CURVES = ("fit", "exact")


def pseudo_threshold(
    physical: MetricSeries,
    logical: MetricSeries,
    mode: str = "exact",
    curve: str = "fit",
    search_max: float | None = None,
    rtol: float = 1e-6,
    atol: float = 1e-15,
) -> ThresholdResult:
    """Smallest strength where the logical curve rises through the physical one.

    With ``curve="fit"`` both series are replaced by their fitted curves
    x^d (c0 + c1 x + c2 x^2) and the crossing is searched on a fine grid from the
    first strength up to ``search_max`` (default: the last strength), then
    bisected. With ``curve="exact"`` the grid values themselves are compared
    and the bracket is bisected on the series' ``evaluate`` callables, or on
    log-linear interpolants when those are missing.
    """
    if physical.metric != logical.metric:
        raise ValueError("physical and logical series measure different metrics")
    if not np.array_equal(physical.strengths, logical.strengths):
        raise ValueError("physical and logical series must share a strength grid")
    if curve not in THRESHOLD_CURVES:
        raise ValueError(f"curve must be one of {THRESHOLD_CURVES}, got {curve!r}")
    metric = physical.metric
    if curve == "fit":
        f_phys = fit_leading_order(physical, require=False)
        f_log = fit_leading_order(logical, require=False)
        top = physical.strengths[-1] if search_max is None else max(search_max, physical.strengths[-1])
        s = np.union1d(np.geomspace(physical.strengths[0], top, 400), physical.strengths)
        phys_vals, log_vals = f_phys(s), f_log(s)
    else:
        s = physical.strengths
        phys_vals, log_vals = physical.values, logical.values
        if physical.evaluate is not None and logical.evaluate is not None:
            f_phys, f_log = physical.evaluate, logical.evaluate
        else:
            f_phys, f_log = _loglog_interp(physical), _loglog_interp(logical)
    diff = log_vals - phys_vals
    scale = np.maximum(np.abs(log_vals), np.abs(phys_vals))
    # fitted curves carry least-squares rounding, so they get a looser notion of "equal"
    zero = np.abs(diff) <= atol + (1e-9 if curve == "fit" else 1e-12) * scale
    sign = np.where(zero, 0, np.sign(diff))
    if np.all(sign == 0):
        return ThresholdResult(float(s[0]), metric, mode, None, "degenerate")
    if np.all(sign >= 0):
        return ThresholdResult(0.0, metric, mode, None, "none")
    ups = [k for k in range(len(s) - 1) if sign[k] < 0 and sign[k + 1] >= 0]
    if not ups:
        # logical below physical on the grid; at tiny strengths it may start above
        if sign[0] > 0:
            return ThresholdResult(0.0, metric, mode, None, "none")
        return ThresholdResult(float(s[-1]), metric, mode, None, "beyond_domain")
    downs = [k for k in range(len(s) - 1) if sign[k] > 0 and sign[k + 1] < 0]
    status = "crossing"
    if len(ups) > 1 or downs:
        warnings.warn("logical and physical curves cross more than once; reporting the smallest crossing")
        status = "multiple"
    if sign[0] > 0:
        # the code only starts to help inside the grid: no threshold below the first dip
        return ThresholdResult(0.0, metric, mode, None, "none")
    k = ups[0]
    lo, hi = float(s[k]), float(s[k + 1])
    if sign[k + 1] == 0:
        return ThresholdResult(hi, metric, mode, (lo, hi), status)
    while hi - lo > rtol * hi:
        mid = float(np.sqrt(lo * hi)) if hi / lo > 4 else 0.5 * (lo + hi)
        if f_log(mid) - f_phys(mid) < 0:
            lo = mid
        else:
            hi = mid
    return ThresholdResult(0.5 * (lo + hi), metric, mode, (lo, hi), status)


def threshold_series(
    tag: str,
    code: CodeSpec,
    metric: str,
    strengths: Sequence[float] = THRESHOLD_STRENGTHS,
    approx: str | None = None,
    n_states: int = DEFAULT_STATES,
    **approx_kwargs,
) -> tuple[MetricSeries, MetricSeries]:
    """Physical curve of the target and logical curve of the target or of an approximation.

    With ``approx`` set this is the exact-over-approximate mode: the physical
    level always uses the real channel and only the logical level uses the
    approximation, refitted at every strength.
    """
    physical = metric_series(model_family(tag), metric, strengths, "physical", n_states)
    fam = model_family(tag, code) if approx is None else approximation_family(tag, approx, code, **approx_kwargs)
    logical = metric_series(fam, metric, strengths, "logical", n_states)
    return physical, logical


def exact_over_approx_series(tag, approx, code, metric, strengths=THRESHOLD_STRENGTHS, **kwargs):
    return threshold_series(tag, code, metric, strengths, approx, **kwargs)


def find_threshold(
    tag: str,
    code: CodeSpec,
    metric: str = "error_rate",
    approx: str | None = None,
    strengths: Sequence[float] = THRESHOLD_STRENGTHS,
    curve: str = "fit",
    domain_max: float | None = None,
    **kwargs,
) -> ThresholdResult:
    """Pseudo-threshold of a channel family (or of an approximation at the logical level).

    Crossings are searched up to ``domain_max`` (the family's largest strength
    by default). Fitted curves are extrapolated there directly; in exact mode
    the grid is widened geometrically, recomputing both curves, until the
    crossing is bracketed or the domain is exhausted.
    """
    strengths = np.asarray(strengths, dtype=float)
    top = domain_max if domain_max is not None else _DOMAIN_MAX.get(tag, strengths[-1])
    mode = "exact" if approx is None else "exact_over_approx"
    while True:
        physical, logical = threshold_series(tag, code, metric, strengths, approx, **kwargs)
        res = pseudo_threshold(physical, logical, mode, curve, search_max=top)
        if curve == "fit" or res.status != "beyond_domain" or strengths[-1] >= top:
            return res
        strengths = np.append(strengths, min(top, strengths[-1] * 2))


# --- coherent vs incoherent scaling -----------------------------------------------

@dataclass(frozen=True)
class ScalingReport:
    exponent: float
    ratios: np.ndarray  # D_diamond / r**exponent_reference at each strength
    strengths: np.ndarray


def scaling_exponent_report(
    family: ChiFamily,
    strengths: Sequence[float] = FIT_STRENGTHS,
    reference: float | None = None,
) -> ScalingReport:
    """Slope of log D_diamond against log r, and the ratios D_diamond / r^reference.

    For a coherent channel the slope is 1/2 at the physical level and 3/4 after
    one level of distance-3 error correction.
    """
    strengths = np.asarray(strengths, dtype=float)
    chis = [family(s) for s in strengths]
    r = np.array([avg_error_rate(c, None)[0] for c in chis])
    dia = np.array([diamond_distance(c)[0] for c in chis])
    slope = float(np.polyfit(np.log(r), np.log(dia), 1)[0])
    ref = slope if reference is None else reference
    return ScalingReport(slope, dia / r**ref, strengths)
