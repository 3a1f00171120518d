"""Conjugate gradients, restarted GMRES, and the stationary iteration.

GMRES is right preconditioned and keeps the preconditioned basis
vectors (flexible variant), so inexact preconditioner applications,
e.g. an inner CG truncated after a fixed residual reduction, are
handled without any linearity assumption.  Convergence tests use the
true residual norm ||b - A x||, recomputed at every restart boundary.
"""

import time
from dataclasses import dataclass

import numpy as np

from .sparse import CsrMatrix, norm2, spmv

__all__ = [
    "LinearOperator",
    "SolveReport",
    "StoppingRule",
    "as_operator",
    "saddle_operator",
    "cg",
    "gmres_restarted",
    "stationary_richardson",
]


class LinearOperator:
    """A square operator given by its dimension and an apply callable."""

    def __init__(self, dim, apply):
        self.dim = int(dim)
        self._apply = apply

    def __call__(self, x):
        y = np.asarray(self._apply(x), dtype=np.float64)
        if y.shape != (self.dim,):
            raise ValueError("operator apply changed the vector length")
        return y


def as_operator(M):
    if isinstance(M, LinearOperator):
        return M
    if isinstance(M, CsrMatrix):
        if M.nrows != M.ncols:
            raise ValueError("operator matrix must be square")
        return LinearOperator(M.nrows, lambda x: spmv(M, x))
    raise TypeError(f"cannot wrap {type(M)!r} as a linear operator")


def saddle_operator(sys):
    """Unassembled block operator [[A, B^T], [-B, C]] of a SaddleSystem."""
    return LinearOperator(sys.order, sys.matvec)


@dataclass
class SolveReport:
    converged: bool
    outer_iterations: int
    total_inner_cg_iterations: int
    residual_history: list
    wall_time: float
    solution: np.ndarray
    stop_reason: str = ""
    rho_estimate: float = None

    @property
    def final_relative_residual(self):
        h = self.residual_history
        return h[-1] / h[0] if h[0] > 0 else 0.0


@dataclass
class StoppingRule:
    rel_tol: float = 1e-9
    max_outer: int = 500
    restart: int = 5

    def __post_init__(self):
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.restart < 1:
            raise ValueError("restart must be at least 1")
        if self.max_outer < 0:
            raise ValueError("max_outer must be non-negative")


def cg(op, b, reduction_factor=100.0, max_iters=40):
    """Conjugate gradient from a zero initial guess.

    Stops when the residual norm has dropped by ``reduction_factor`` or
    after ``max_iters`` steps, whichever comes first; hitting the step
    cap is a normal outcome, not an error.  The operator must be
    symmetric positive definite; a non-positive curvature p.Ap breaks
    the recurrences and raises.
    """
    op = as_operator(op)
    b = np.asarray(b, dtype=np.float64)
    t0 = time.perf_counter()
    r = b.copy()
    x = np.zeros(op.dim)
    rn0 = norm2(r)
    history = [rn0]
    if rn0 == 0.0:
        return SolveReport(True, 0, 0, history, time.perf_counter() - t0, x, "tolerance")
    target = rn0 / reduction_factor
    p = r.copy()
    rs = rn0 * rn0
    k = 0
    reason = "max_iters"
    while k < max_iters:
        ap = op(p)
        pap = float(np.dot(p, ap))
        if pap <= 0.0:
            raise ValueError(
                f"CG breakdown: p.Ap = {pap:.3e} <= 0, operator is not symmetric positive definite"
            )
        alpha = rs / pap
        x += alpha * p
        r -= alpha * ap
        rs_new = float(np.dot(r, r))
        k += 1
        history.append(np.sqrt(rs_new))
        if history[-1] <= target:
            reason = "tolerance"
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return SolveReport(
        history[-1] <= target, k, 0, history, time.perf_counter() - t0, x, reason
    )


def _givens(a, b):
    if b == 0.0:
        return 1.0, 0.0
    r = np.hypot(a, b)
    return a / r, b / r


def gmres_restarted(op, b, precond=None, rule=None):
    """Restarted GMRES with optional right preconditioning.

    Arnoldi uses modified Gram-Schmidt with Givens rotations for the
    running least-squares problem.  ``outer_iterations`` counts the
    total number of Arnoldi steps across all restart cycles (not the
    number of restarts).  The residual history holds true residual
    norms, one entry per restart boundary.
    """
    op = as_operator(op)
    rule = rule or StoppingRule()
    b = np.asarray(b, dtype=np.float64)
    t0 = time.perf_counter()
    dim = op.dim
    bn = norm2(b)
    inner0 = getattr(precond, "inner_iterations", 0)
    x = np.zeros(dim)
    if bn == 0.0:
        return SolveReport(True, 0, 0, [0.0], time.perf_counter() - t0, x, "tolerance")
    tol_abs = rule.rel_tol * bn
    r = b.copy()
    rn = bn
    history = [rn]
    steps = 0
    while rn > tol_abs and steps < rule.max_outer:
        kmax = min(rule.restart, rule.max_outer - steps)
        V = np.zeros((dim, kmax + 1))
        Z = np.zeros((dim, kmax))
        H = np.zeros((kmax + 1, kmax))
        cs = np.zeros(kmax)
        sn = np.zeros(kmax)
        gvec = np.zeros(kmax + 1)
        gvec[0] = rn
        V[:, 0] = r / rn
        k = 0
        for j in range(kmax):
            z = precond.apply(V[:, j]) if precond is not None else V[:, j]
            Z[:, j] = z
            w = op(z)
            for i in range(j + 1):
                H[i, j] = float(np.dot(V[:, i], w))
                w -= H[i, j] * V[:, i]
            hj = norm2(w)
            H[j + 1, j] = hj
            happy = hj <= 1e-14 * max(1.0, float(np.max(np.abs(H[: j + 1, j]))))
            if not happy:
                V[:, j + 1] = w / hj
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            cs[j], sn[j] = _givens(H[j, j], H[j + 1, j])
            H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
            H[j + 1, j] = 0.0
            gvec[j + 1] = -sn[j] * gvec[j]
            gvec[j] *= cs[j]
            steps += 1
            k = j + 1
            if abs(gvec[j + 1]) <= tol_abs or happy or steps >= rule.max_outer:
                break
        y = _solve_upper(H[:k, :k], gvec[:k])
        x += Z[:, :k] @ y if precond is not None else V[:, :k] @ y
        r = b - op(x)
        rn = norm2(r)
        history.append(rn)
    inner = getattr(precond, "inner_iterations", 0) - inner0
    converged = rn <= tol_abs
    return SolveReport(
        converged,
        steps,
        inner,
        history,
        time.perf_counter() - t0,
        x,
        "tolerance" if converged else "max_outer",
    )


def _solve_upper(R, g):
    k = R.shape[0]
    y = np.zeros(k)
    for i in range(k - 1, -1, -1):
        s = g[i] - R[i, i + 1:] @ y[i + 1:]
        y[i] = s / R[i, i]
    return y


def stationary_richardson(op, b, precond, rule=None):
    """Fixed-point iteration u <- u + P^{-1}(b - A u) from a zero guess.

    With P equal to the half-sum splitting matrix of the saddle
    operator this is exactly the stationary scheme M u+ = N u + b.
    Residual growth past 10x the initial norm is flagged as divergence
    (converged False, stop_reason "diverged") rather than raised.
    """
    op = as_operator(op)
    rule = rule or StoppingRule()
    b = np.asarray(b, dtype=np.float64)
    t0 = time.perf_counter()
    inner0 = getattr(precond, "inner_iterations", 0)
    x = np.zeros(op.dim)
    r = b.copy()
    rn0 = norm2(r)
    history = [rn0]
    if rn0 == 0.0:
        return SolveReport(True, 0, 0, history, time.perf_counter() - t0, x, "tolerance")
    its = 0
    reason = "max_outer"
    while its < rule.max_outer:
        x += precond.apply(r)
        r = b - op(x)
        rn = norm2(r)
        its += 1
        history.append(rn)
        if rn <= rule.rel_tol * rn0:
            reason = "tolerance"
            break
        if rn > 10.0 * rn0:
            reason = "diverged"
            break
    inner = getattr(precond, "inner_iterations", 0) - inner0
    return SolveReport(
        history[-1] <= rule.rel_tol * rn0,
        its,
        inner,
        history,
        time.perf_counter() - t0,
        x,
        reason,
    )
