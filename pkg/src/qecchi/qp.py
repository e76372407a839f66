"""Dense convex quadratic programs via a Mehrotra predictor-corrector interior-point method.

    minimize  x'Qx/2 + c'x   subject to  A x = b,  G x <= h

Q must be positive semidefinite. After the interior-point phase the active set
is read off the final iterate and the equality-constrained KKT system on that
set is solved directly, which recovers tiny variables to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class QPSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class QPResult:
    x: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    polished: bool


def _reduce_equalities(a: np.ndarray, b: np.ndarray, rtol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Replace A x = b by an equivalent full-row-rank system."""
    if a.size == 0:
        return a.reshape(0, a.shape[1] if a.ndim == 2 else 0), b.reshape(0)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    keep = s > rtol * max(1.0, s[0])
    return (s[keep, None] * vt[keep]), u[:, keep].T @ b


def _kkt_residual(q, c, a, b, g, h, x, y, z) -> float:
    rd = q @ x + c + a.T @ y + g.T @ z
    rp = a @ x - b
    slack = h - g @ x
    return float(max(
        np.max(np.abs(rd), initial=0.0),
        np.max(np.abs(rp), initial=0.0),
        np.max(-slack, initial=0.0),
        np.max(-z, initial=0.0),
        np.max(np.abs(z * slack), initial=0.0),
    ))


def _step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    return float(min(1.0, np.min(-v[neg] / dv[neg], initial=np.inf)))


def solve_qp(
    q: np.ndarray,
    c: np.ndarray,
    a: np.ndarray | None = None,
    b: np.ndarray | None = None,
    g: np.ndarray | None = None,
    h: np.ndarray | None = None,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> QPResult:
    q = np.asarray(q, dtype=float)
    c = np.asarray(c, dtype=float)
    n = len(c)
    a = np.zeros((0, n)) if a is None else np.atleast_2d(np.asarray(a, dtype=float))
    b = np.zeros(0) if b is None else np.atleast_1d(np.asarray(b, dtype=float))
    g = np.zeros((0, n)) if g is None else np.atleast_2d(np.asarray(g, dtype=float))
    h = np.zeros(0) if h is None else np.atleast_1d(np.asarray(h, dtype=float))
    a, b = _reduce_equalities(a, b)
    me, mi = len(b), len(h)

    x = np.linalg.lstsq(a, b, rcond=None)[0] if me else np.zeros(n)
    s = np.maximum(h - g @ x, 1.0)
    z = np.ones(mi)
    y = np.zeros(me)
    scale = 1 + max(np.max(np.abs(q), initial=0), np.max(np.abs(c), initial=0))
    it = 0
    for it in range(1, max_iter + 1):
        rd = q @ x + c + a.T @ y + g.T @ z
        rp = a @ x - b
        rg = g @ x + s - h
        mu = float(s @ z) / mi if mi else 0.0
        if (
            np.max(np.abs(rd), initial=0) < tol * scale
            and np.max(np.abs(rp), initial=0) < tol * (1 + np.max(np.abs(b), initial=0))
            and np.max(np.abs(rg), initial=0) < tol * (1 + np.max(np.abs(h), initial=0))
            and mu < tol * scale
        ):
            break
        if not (np.isfinite(mu) and np.all(s > 0) and np.all(z > 0)) or (mi and mu < 1e-16 * scale):
            break  # converged as far as the conditioning allows; the polish step finishes the job
        w = z / s
        hmat = q + g.T @ (w[:, None] * g)
        kkt = np.block([[hmat, a.T], [a, np.zeros((me, me))]])

        def direction(rc):
            rhs = np.concatenate([-rd - g.T @ ((-rc + z * rg) / s), -rp])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            dx, dy = sol[:n], sol[n:]
            ds = -rg - g @ dx
            dz = (-rc - z * ds) / s
            return dx, dy, ds, dz

        dx, dy, ds, dz = direction(s * z)
        alpha = min(_step(s, ds), _step(z, dz))
        mu_aff = float((s + alpha * ds) @ (z + alpha * dz)) / mi if mi else 0.0
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        dx, dy, ds, dz = direction(s * z + ds * dz - sigma * mu)
        alpha = 0.99 * min(_step(s, ds), _step(z, dz)) if mi else 1.0
        alpha = min(alpha, 1.0)
        step = (x + alpha * dx, y + alpha * dy, s + alpha * ds, z + alpha * dz)
        if not all(np.all(np.isfinite(v)) for v in step):
            break
        x, y, s, z = step

    res = _kkt_residual(q, c, a, b, g, h, x, y, z)
    polished = False
    px = _polish(q, c, a, b, g, h, x, s, z)
    if px is not None:
        pobj = 0.5 * px @ q @ px + c @ px
        obj = 0.5 * x @ q @ x + c @ x
        py, pz = _multipliers(q, c, a, g, h, px)
        pres = _kkt_residual(q, c, a, b, g, h, px, py, pz)
        if pobj <= obj + 1e-14 * (1 + abs(obj)) and pres <= max(res, tol):
            x, res, polished = px, pres, True
    return QPResult(x=x, objective=float(0.5 * x @ q @ x + c @ x), kkt_residual=res, iterations=it, polished=polished)


def _polish(q, c, a, b, g, h, x, s, z):
    """Active-set refinement started from the set guessed by the interior-point iterate.

    Each pass solves the equality QP on the current working set, then adds the
    most violated inequality or drops the constraint with the most negative
    multiplier. The guess (z > s) is usually right; the refinement matters when
    some solution entries are smaller than the interior-point tolerance.
    """
    n, me = len(c), len(b)
    active = z > s
    slack_tol = 1e-13 * (1 + np.max(np.abs(h), initial=0.0))
    mult_tol = 1e-14 * (1 + np.max(np.abs(q), initial=0.0) + np.max(np.abs(c), initial=0.0))
    for _ in range(2 * len(h) + 5):
        ga, ha = g[active], h[active]
        eq = np.vstack([a, ga])
        m = len(eq)
        kkt = np.block([[q, eq.T], [eq, np.zeros((m, m))]])
        sol = np.linalg.lstsq(kkt, np.concatenate([-c, b, ha]), rcond=None)[0]
        px, lam = sol[:n], sol[n + me:]
        if np.max(np.abs(a @ px - b), initial=0.0) > 1e-12:
            return None
        viol = g @ px - h
        viol[active] = -np.inf
        if np.max(viol, initial=-np.inf) > slack_tol:
            active[int(np.argmax(viol))] = True
            continue
        if len(lam) and np.min(lam) < -mult_tol:
            active[np.flatnonzero(active)[int(np.argmin(lam))]] = False
            continue
        return px
    return None


def _multipliers(q, c, a, g, h, x):
    """Least-squares multipliers (y, z >= 0) for the active constraints at x."""
    slack = h - g @ x
    active = slack < 1e-12 * (1 + np.max(np.abs(h), initial=0.0))
    mat = np.hstack([a.T, g[active].T])
    lam = np.linalg.lstsq(mat, -(q @ x + c), rcond=None)[0] if mat.size else np.zeros(0)
    y = lam[: a.shape[0]]
    z = np.zeros(len(h))
    z[active] = lam[a.shape[0]:]
    return y, z
