"""Stabilizer-simulable approximations of a target channel.

An approximation is a convex mixture of elementary channels (Pauli or
Clifford unitaries and reset-type translations) whose process matrix is as
close as possible to the target in Hilbert-Schmidt distance. The "honest"
variants add the requirement that, for every pure input, the approximation
moves the state at least as far (in trace distance) as the target does.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ElementaryChannelSet, KrausChannel, elementary_set, mixture
from .core import fibonacci_sphere
from .metrics import ChannelLike, as_chi, chi_deviation, deviation_transfer, trace_distance_states
from .qp import solve_qp

VARIANTS = ("PCa", "PCw", "CMCa", "CMCw", "DC")
TRAIN_STATES = 150
VERIFY_STATES = 10_000
HONEST_SLACK = 1e-8


class InfeasibleApproximationError(ValueError):
    def __init__(self, message: str, worst_state: np.ndarray, violation: float):
        super().__init__(f"{message}; worst state {np.round(worst_state, 6).tolist()} violates by {violation:.3e}")
        self.worst_state = worst_state
        self.violation = violation


@dataclass(frozen=True)
class ApproximationResult:
    variant: str
    member_ids: tuple[str, ...]
    weights: np.ndarray
    chi: np.ndarray
    hs_distance: float
    honest: bool
    honesty_margin: float
    kkt_residual: float = 0.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < -1e-12) or abs(w.sum() - 1) > 1e-10:
            raise ValueError("weights must form a probability vector")
        object.__setattr__(self, "weights", w)
        if self.honest and self.honesty_margin < -HONEST_SLACK:
            raise ValueError("an honest approximation cannot have a negative honesty margin")

    def channel(self, members: ElementaryChannelSet | None = None) -> KrausChannel:
        members = members or _set_for(self.member_ids)
        return mixture(members.members, self.weights, self.variant)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "weights": [{"member_id": m, "weight": float(w)} for m, w in zip(self.member_ids, self.weights)],
            "hs_distance": self.hs_distance,
            "honest": self.honest,
            "honesty_margin": self.honesty_margin,
        }


def _set_for(ids: tuple[str, ...]) -> ElementaryChannelSet:
    for flag in (True, False):
        s = elementary_set(flag)
        if s.ids == tuple(ids):
            return s
    raise ValueError("member ids do not match a known elementary set")


def verify_honesty(model: ChannelLike, target: ChannelLike, n_grid: int = VERIFY_STATES) -> float:
    """Minimum over ``n_grid`` lattice states of D_tr(model) - D_tr(target)."""
    states = fibonacci_sphere(n_grid)
    return float(np.min(trace_distance_states(model, states) - trace_distance_states(target, states)))


class _Problem:
    """Precomputed data for fitting mixtures of ``members`` to one target.

    Weights are written as w = e_ref + sigma * u, where e_ref puts all weight on
    the identity member and sigma is the size of the target's deviation from
    the identity. The quadratic programs are solved for u, whose entries are of
    order one, so the small weights keep their relative precision.
    """

    def __init__(self, target_chi: np.ndarray, members: ElementaryChannelSet):
        if len(members) == 0:
            raise ValueError("the elementary set is empty")
        self.members = members
        self.target = target_chi
        self.member_chis = members.chis()
        devs = np.array([chi_deviation(c) for c in self.member_chis])
        self.embed = np.concatenate([devs.real.reshape(len(devs), -1), devs.imag.reshape(len(devs), -1)], axis=1).T
        tdev = chi_deviation(target_chi)
        self.target_vec = np.concatenate([tdev.real.ravel(), tdev.imag.ravel()])
        self.transfers = np.array([deviation_transfer(c) for c in self.member_chis])  # (n, 4, 4)
        ref = [i for i, c in enumerate(self.member_chis) if np.allclose(chi_deviation(c), 0, atol=1e-14)]
        if not ref:
            raise ValueError("the elementary set must contain the identity channel")
        self.ref = np.zeros(self.n)
        self.ref[ref[0]] = 1.0
        self.sigma = float(np.linalg.norm(self.target_vec)) or 1.0
        self.hess_scale = max(float(np.max(np.abs(self.embed.T @ self.embed))), 1e-300)

    @property
    def n(self) -> int:
        return len(self.member_chis)

    def displacements(self, states: np.ndarray) -> np.ndarray:
        """(n_states, 3, n_members) Bloch displacement of each member for each state."""
        return np.einsum("mij,sj->sim", self.transfers[:, 1:, 1:], states) + self.transfers[:, 1:, 0].T[None]

    def chi_of(self, w: np.ndarray) -> np.ndarray:
        return np.einsum("m,mij->ij", w, self.member_chis)

    def hs_distance(self, w: np.ndarray) -> float:
        return float(np.linalg.norm(self.embed @ w - self.target_vec))

    def solve(self, q, c, a=None, b=None, g=None, h=None):
        """Solve a QP posed in weight space (simplex added here) through the scaled variables u.

        Returns the weights and the KKT residual of the scaled problem.
        """
        n, sg, ref = self.n, self.sigma, self.ref
        a = np.ones((1, n)) if a is None else np.vstack([np.ones((1, n)), a])
        b = np.ones(1) if b is None else np.concatenate([np.ones(1), b])
        g = -np.eye(n) if g is None else np.vstack([-np.eye(n), g])
        h = np.zeros(n) if h is None else np.concatenate([np.zeros(n), h])
        res = solve_qp(q, (c + q @ ref) / sg, a, (b - a @ ref) / sg, g, (h - g @ ref) / sg)
        return _clean(ref + sg * res.x), res.kkt_residual

    def hs_terms(self):
        """Hessian and linear term of ||sum_i w_i chi_i - chi_target||^2, normalized to a unit Hessian."""
        q = 2 * self.embed.T @ self.embed / self.hess_scale
        c = -2 * self.embed.T @ self.target_vec / self.hess_scale
        return q, c


def _min_norm_weights(p: _Problem, w: np.ndarray) -> tuple[np.ndarray, float]:
    """Among simplex weights giving the same process matrix as ``w``, the one of least Euclidean norm."""
    fixed = p.embed / np.sqrt(p.hess_scale)
    return p.solve(np.eye(p.n), np.zeros(p.n), fixed, fixed @ w)


def _clean(w: np.ndarray) -> np.ndarray:
    w = np.where(w < 0, 0.0, w)
    return w / w.sum()


def _unconstrained(p: _Problem) -> tuple[np.ndarray, float]:
    return p.solve(*p.hs_terms())


def _margins(p: _Problem, w: np.ndarray, states: np.ndarray, target_td: np.ndarray) -> np.ndarray:
    disp = p.displacements(states) @ w
    return 0.5 * np.linalg.norm(disp, axis=1) - target_td


def _uniform_pauli(p: _Problem) -> np.ndarray:
    """Equal mixture of the X, Y and Z members: every pure state moves by 4/3 in Bloch length."""
    u = np.zeros(p.n)
    for key in ("X", "Y", "Z"):
        label_match = [i for i, m in enumerate(p.members.members) if m.label == key]
        u[label_match[0]] = 1 / 3
    return u


def _restore(p: _Problem, w: np.ndarray, states: np.ndarray, target_td: np.ndarray) -> np.ndarray:
    """Smallest mixing with the uniform-Pauli point that satisfies every training constraint."""
    if np.min(_margins(p, w, states, target_td)) >= 0:
        return w
    u = _uniform_pauli(p)
    m_u = _margins(p, u, states, target_td)
    if np.min(m_u) < 0:
        i = int(np.argmin(m_u))
        raise InfeasibleApproximationError("no honest mixture exists for this target", states[i], float(-m_u[i]))
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if np.min(_margins(p, (1 - mid) * w + mid * u, states, target_td)) >= 0:
            hi = mid
        else:
            lo = mid
    return (1 - hi) * w + hi * u


def _linearized_fit(p: _Problem, w: np.ndarray, states: np.ndarray, target_td: np.ndarray, max_iter: int = 200):
    """Sequential linearization of |D_s w|/2 >= t_s around feasible iterates (convex-concave procedure)."""
    q, c = p.hs_terms()
    keep = target_td > 0
    states, target_td = states[keep], target_td[keep]
    d = p.displacements(states)  # (s, 3, n)
    obj_prev = np.inf
    kkt = 0.0
    for _ in range(max_iter):
        v = d @ w
        norms = np.linalg.norm(v, axis=1)
        hat = v / norms[:, None]
        rows = -0.5 * np.einsum("si,sim->sm", hat, d)
        w_new, kkt_new = p.solve(q, c, g=rows, h=-target_td)
        if np.min(_margins(p, w_new, states, target_td)) < 0:
            # clipping round-off can cost a few ulps of feasibility; keep the previous point then
            w_new = _restore(p, w_new, states, target_td)
        w, kkt = w_new, kkt_new
        obj = p.hs_distance(w) / p.sigma
        if obj_prev - obj <= 1e-12:
            break
        obj_prev = obj
    return w, kkt


def _honest_fit(p: _Problem, w0: np.ndarray, n_train: int, n_verify: int) -> tuple[np.ndarray, float]:
    target_states = fibonacci_sphere(n_train)
    verify_states = fibonacci_sphere(n_verify)
    verify_td = trace_distance_states(p.target, verify_states)
    states = target_states
    w = w0
    kkt = 0.0
    for _ in range(20):
        td = trace_distance_states(p.target, states)
        w = _restore(p, w, states, td)
        w, kkt = _linearized_fit(p, w, states, td)
        m = _margins(p, w, verify_states, verify_td)
        worst = np.argsort(m)[:25]
        worst = worst[m[worst] < -1e-13 * max(float(np.max(verify_td)), 1e-300)]
        if len(worst) == 0:
            break
        states = np.vstack([states, verify_states[worst]])
    return w, kkt


def fit(
    target: ChannelLike,
    members: ElementaryChannelSet,
    constrained: bool,
    n_train: int = TRAIN_STATES,
    n_verify: int = VERIFY_STATES,
) -> ApproximationResult:
    """Hilbert-Schmidt closest mixture of ``members`` to ``target``, optionally honest."""
    p = _Problem(as_chi(target), members)
    w, kkt = _unconstrained(p)
    if constrained:
        w, kkt = _honest_fit(p, w, n_train, n_verify)
    w, kkt2 = _min_norm_weights(p, w)
    chi = p.chi_of(w)
    margin = verify_honesty(chi, p.target, n_verify)
    variant = ("PC" if members.pauli_only else "CMC") + ("w" if constrained else "a")
    return ApproximationResult(
        variant=variant,
        member_ids=members.ids,
        weights=w,
        chi=chi,
        hs_distance=p.hs_distance(w),
        honest=margin >= -HONEST_SLACK,
        honesty_margin=margin,
        kkt_residual=max(kkt, kkt2),
    )


_DC_DIRECTION = np.diag([-2.0, 2 / 3, 2 / 3, 2 / 3])


def depolarizing_fit(target: ChannelLike, n_verify: int = VERIFY_STATES) -> ApproximationResult:
    """Closest depolarizing channel diag(2(1-p), 2p/3, 2p/3, 2p/3) in Hilbert-Schmidt distance."""
    chi_t = as_chi(target)
    dev = chi_deviation(chi_t)
    p = float(np.real(np.vdot(_DC_DIRECTION, dev)) / np.sum(_DC_DIRECTION**2))
    p = min(max(p, 0.0), 1.0)
    pauli = elementary_set(pauli_only=True)
    w = np.array([1 - p, p / 3, p / 3, p / 3])
    chi = np.einsum("m,mij->ij", w, pauli.chis())
    dist_dev = p * _DC_DIRECTION - dev
    margin = verify_honesty(chi, chi_t, n_verify)
    return ApproximationResult(
        variant="DC",
        member_ids=pauli.ids,
        weights=w,
        chi=chi,
        hs_distance=float(np.linalg.norm(dist_dev)),
        honest=margin >= -HONEST_SLACK,
        honesty_margin=margin,
    )


def approximate(target: ChannelLike, variant: str, **kwargs) -> ApproximationResult:
    """Build one of the named approximations (PCa, PCw, CMCa, CMCw, DC)."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if variant == "DC":
        return depolarizing_fit(target, **{k: v for k, v in kwargs.items() if k == "n_verify"})
    members = elementary_set(pauli_only=variant.startswith("PC"))
    return fit(target, members, constrained=variant.endswith("w"), **kwargs)
