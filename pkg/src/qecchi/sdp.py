"""Small dense complex semidefinite programs and the diamond-distance program.

Standard form, with every matrix Hermitian::

    primal:  minimize <C, X>   subject to  <A_i, X> = b_i,  X >= 0
    dual:    maximize b.y      subject to  S = C - sum_i y_i A_i >= 0

Solved with an infeasible-start primal-dual interior-point method using the
HKM search direction and a Mehrotra predictor-corrector step. Problems here
are at most 10x10, so everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import dagger, partial_trace


class SDPSolverError(RuntimeError):
    def __init__(self, message: str, gap: float):
        super().__init__(f"{message} (duality gap reached {gap:.3e})")
        self.gap = gap


@dataclass(frozen=True)
class SDPResult:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    primal_value: float
    dual_value: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool


def _inner(a: np.ndarray, b: np.ndarray) -> float:
    """Real inner product Re Tr(A^dagger B)."""
    return float(np.real(np.vdot(a, b)))


def _herm(a: np.ndarray) -> np.ndarray:
    return (a + dagger(a)) / 2


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with X + alpha dX still PSD (X positive definite)."""
    l = np.linalg.cholesky(x)
    li = np.linalg.inv(l)
    lam = np.linalg.eigvalsh(_herm(li @ dx @ dagger(li)))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def solve_sdp(
    c: np.ndarray,
    constraints: Sequence[np.ndarray],
    b: Sequence[float],
    tol: float = 1e-10,
    max_iter: int = 100,
    init_scale: float = 1.0,
    step_fraction: float = 0.98,
) -> SDPResult:
    c = np.asarray(c, dtype=complex)
    a = np.asarray(constraints, dtype=complex)
    b = np.asarray(b, dtype=float)
    n = c.shape[0]
    m = len(b)

    def amap(z):
        return np.real(np.einsum("kij,ij->k", a.conj(), z))

    def aadj(y):
        return np.einsum("k,kij->ij", y, a)

    x = init_scale * np.eye(n, dtype=complex)
    s = init_scale * np.eye(n, dtype=complex)
    y = np.zeros(m)
    bnorm = 1 + np.linalg.norm(b)
    cnorm = 1 + np.linalg.norm(c)
    converged = False
    best = None
    it = 0
    for it in range(1, max_iter + 1):
        rp = b - amap(x)
        rd = c - aadj(y) - s
        mu = _inner(x, s) / n
        pobj, dobj = _inner(c, x), float(b @ y)
        merit = max(
            np.linalg.norm(rp) / bnorm,
            np.linalg.norm(rd) / cnorm,
            abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj)),
        )
        if best is None or merit < best[0]:
            best = (merit, x, y, s, it)
        if merit < tol:
            converged = True
            break
        if merit > 1e3 * best[0]:
            break  # numerical breakdown near the boundary; keep the best iterate
        try:
            s_inv = _herm(np.linalg.inv(s))
            # Schur complement M_ij = Re Tr(A_i X A_j S^-1)
            ax = np.einsum("kij,jl->kil", a, x)
            as_inv = np.einsum("kij,jl->kil", a, s_inv)
            mat = np.real(np.einsum("kij,lji->kl", ax, as_inv))
            chol = np.linalg.cholesky((mat + mat.T) / 2)

            def direction(rhs_c):
                # dX + sym(X dS S^-1) = rhs_c, A(dX) = rp, A*(dy) + dS = rd
                g = rhs_c - _herm(x @ rd @ s_inv)
                dy = np.linalg.solve(chol.T.conj(), np.linalg.solve(chol, rp - amap(g)))
                ds = rd - aadj(dy)
                dx = _herm(rhs_c - x @ ds @ s_inv)
                return dx, dy, ds

            # predictor
            dx_a, dy_a, ds_a = direction(-x)
            ap = min(1.0, _max_step(x, dx_a))
            ad = min(1.0, _max_step(s, ds_a))
            mu_aff = _inner(x + ap * dx_a, s + ad * ds_a) / n
            sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3
            # corrector
            rc = sigma * mu * s_inv - x - _herm(dx_a @ ds_a @ s_inv)
            dx, dy, ds = direction(rc)
            ap = min(1.0, step_fraction * _max_step(x, dx))
            ad = min(1.0, step_fraction * _max_step(s, ds))
        except np.linalg.LinAlgError:
            break
        x = _herm(x + ap * dx)
        y = y + ad * dy
        s = _herm(s + ad * ds)
    _, x, y, s, it = best
    rp = b - amap(x)
    rd = c - aadj(y) - s
    pobj, dobj = _inner(c, x), float(b @ y)
    return SDPResult(
        x=x,
        y=y,
        s=s,
        primal_value=pobj,
        dual_value=dobj,
        gap=abs(pobj - dobj),
        primal_residual=float(np.linalg.norm(rp)),
        dual_residual=float(np.linalg.norm(rd)),
        iterations=it,
        converged=converged,
    )


def hermitian_basis(d: int) -> np.ndarray:
    """Real-orthonormal basis of d x d Hermitian matrices (d^2 elements)."""
    out = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1
        out.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = 1 / np.sqrt(2)
            out.append(e)
            f = np.zeros((d, d), dtype=complex)
            f[i, j] = -1j / np.sqrt(2)
            f[j, i] = 1j / np.sqrt(2)
            out.append(f)
    return np.array(out)


def _blockdiag(*blocks: np.ndarray) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=complex)
    k = 0
    for blk in blocks:
        d = blk.shape[0]
        out[k:k + d, k:k + d] = blk
        k += d
    return out


@dataclass(frozen=True)
class DiamondResult:
    value: float
    gap: float
    iterations: int


# (init_scale, step_fraction) pairs tried in order when a solve stalls
_RETRIES = ((1.0, 0.98), (0.1, 0.95), (10.0, 0.9), (1.0, 0.8))


def diamond_from_choi(j: np.ndarray, gap_tol: float = 1e-7) -> DiamondResult:
    """Half the diamond norm of a Hermiticity-preserving qubit map from its Choi matrix.

    ``j`` is 4x4 with the input factor first. Solves
    max <J, W> subject to 0 <= W <= rho (x) I, rho a density matrix,
    written as X = blockdiag(W, V, rho) with W + V = rho (x) I. The value is
    half the diamond norm when J is the Choi matrix of a difference of two
    channels.
    """
    j = _herm(np.asarray(j, dtype=complex))
    scale = float(np.linalg.norm(j))
    if scale == 0:
        return DiamondResult(0.0, 0.0, 0)
    jn = j / scale
    basis = hermitian_basis(4)
    z2, z4 = np.zeros((2, 2)), np.zeros((4, 4))
    cons = [_blockdiag(e, e, -partial_trace(e, [0], 2)) for e in basis]
    cons.append(_blockdiag(z4, z4, np.eye(2)))
    b = np.zeros(len(cons))
    b[-1] = 1.0
    c = _blockdiag(-jn, z4, z2)
    best = None
    for init, frac in _RETRIES:
        res = solve_sdp(c, cons, b, tol=1e-11, max_iter=150, init_scale=init, step_fraction=frac)
        gap = res.gap * scale
        if best is None or gap < best[1]:
            best = (res, gap)
        if gap < gap_tol and res.primal_residual < 1e-9 and res.dual_residual < 1e-9:
            break
    res, gap = best
    if not gap < gap_tol:
        raise SDPSolverError("diamond-norm program did not converge", gap)
    value = -(res.primal_value + res.dual_value) / 2 * scale
    return DiamondResult(max(value, 0.0), gap, res.iterations)
