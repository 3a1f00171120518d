"""Eigenvalue machinery for spectra of preconditioned saddle operators.

Two desk-scale eigensolvers are implemented from scratch: a cyclic
Jacobi method for symmetric matrices and a Hessenberg + Francis
double-shift QR iteration for general real matrices.  On top of them
sit the operators this package actually cares about: the spectrum of
the stationary iteration matrix (whose spectral radius must stay below
one for every positive pair of shifts), and the spectrum of the
rmgss-preconditioned matrix, which consists of the eigenvalue 1 with
multiplicity n together with mu_i / (beta + mu_i) where mu_i are the
eigenvalues of C + B A^{-1} B^T.
"""

from dataclasses import dataclass

import numpy as np

from . import factor
from .precond import MgssApplicator, PrecondSpec
from .sparse import assemble_block_saddle, dense_cap, to_dense
from .stationary import IterationMatrixOperator

__all__ = [
    "Spectrum",
    "COMPUTED_DENSE",
    "COMPUTED_SYMMETRIC",
    "PREDICTED",
    "POWER_ESTIMATE",
    "jacobi_symmetric",
    "jacobi_symmetric_eigen",
    "dense_eigen_real_schur",
    "power_spectral_radius",
    "predicted_rmgss_spectrum",
    "iteration_matrix_check",
    "dense_operator_matrix",
    "gamma_dense",
    "mgss_preconditioned_dense",
    "rmgss_preconditioned_dense",
]

COMPUTED_DENSE = "COMPUTED_DENSE"
COMPUTED_SYMMETRIC = "COMPUTED_SYMMETRIC"
PREDICTED = "PREDICTED"
POWER_ESTIMATE = "POWER_ESTIMATE"

_EPS = np.finfo(np.float64).eps
DENSE_EIG_MAX_ORDER = 400
JACOBI_MAX_ORDER = 1000


def _sorted_complex(vals):
    vals = np.asarray(vals, dtype=np.complex128)
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


@dataclass
class Spectrum:
    """Eigenvalue multiset, sorted by (re, im), with provenance tag."""

    eigenvalues: np.ndarray
    source: str
    order: int

    def __post_init__(self):
        self.eigenvalues = _sorted_complex(self.eigenvalues)

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write("re,im,source\n")
            for lam in self.eigenvalues:
                fh.write(f"{lam.real:.17g},{lam.imag:.17g},{self.source}\n")

    def __len__(self):
        return self.eigenvalues.size


# -- symmetric eigensolver (cyclic Jacobi) --------------------------------


def _offdiag_norm(a):
    b = a - np.diag(np.diagonal(a))
    return float(np.linalg.norm(b))


def jacobi_symmetric(M, tol_factor=1e-12, max_sweeps=60):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Rotations run until the off-diagonal Frobenius norm falls below
    ``tol_factor`` times the Frobenius norm of the input.  Returns the
    unsorted eigenvalue vector and the accumulated rotation matrix V
    with M @ V approximately equal to V @ diag(w).
    """
    a = np.array(M, dtype=np.float64, copy=True)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("matrix must be square")
    if n > JACOBI_MAX_ORDER:
        raise ValueError(f"order {n} exceeds the Jacobi solver cap {JACOBI_MAX_ORDER}")
    if n and float(np.max(np.abs(a - a.T))) > 1e-12 * max(1.0, float(np.max(np.abs(a)))):
        raise ValueError("Jacobi eigensolver requires a symmetric matrix")
    v = np.eye(n)
    if n < 2:
        return np.diagonal(a).copy(), v
    norm_f = float(np.linalg.norm(a))
    target = tol_factor * norm_f
    if norm_f == 0.0:
        return np.zeros(n), v
    # rotating entries below this cannot push the off-norm above target
    skip = target / (2.0 * n * n)
    converged = False
    for _ in range(max_sweeps):
        off = _offdiag_norm(a)
        if off <= target:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    if not converged:
        if _offdiag_norm(a) > target:
            raise RuntimeError("Jacobi iteration did not reach the off-diagonal target")
    return np.diagonal(a).copy(), v


def jacobi_symmetric_eigen(M):
    w, _ = jacobi_symmetric(M)
    return Spectrum(w.astype(np.complex128), COMPUTED_SYMMETRIC, len(w))


# -- general real eigensolver (Hessenberg + Francis QR) -------------------


def _balance(a):
    """Parlett-Reinsch balancing with exact powers of two."""
    n = a.shape[0]
    radix = 2.0
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.sum(np.abs(a[:, i])) - abs(a[i, i])
            r = np.sum(np.abs(a[i, :])) - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            f = 1.0
            s = c + r
            while c < r / radix:
                c *= radix
                r /= radix
                f *= radix
            while c >= r * radix:
                c /= radix
                r *= radix
                f /= radix
            if (c + r) < 0.95 * s and f != 1.0:
                done = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def _hessenberg(a):
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1:, k]
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        v = x.copy()
        v[0] += np.copysign(nx, x[0] if x[0] != 0.0 else 1.0)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v /= nv
        a[k + 1:, k:] -= 2.0 * np.outer(v, v @ a[k + 1:, k:])
        a[:, k + 1:] -= 2.0 * np.outer(a[:, k + 1:] @ v, v)
        a[k + 2:, k] = 0.0
    return a


def _eig_2x2(a, b, c, d):
    mid = 0.5 * (a + d)
    p = 0.5 * (a - d)
    disc = p * p + b * c
    if disc >= 0.0:
        rt = np.sqrt(disc)
        if mid >= 0.0:
            l1 = mid + rt
        else:
            l1 = mid - rt
        det = a * d - b * c
        l2 = det / l1 if l1 != 0.0 else mid - np.copysign(rt, mid)
        return complex(l1), complex(l2)
    rt = np.sqrt(-disc)
    return complex(mid, rt), complex(mid, -rt)


def _house3(x, y, z):
    """3-vector Householder: returns v (unit) with (I-2vv^T)(x,y,z) ~ alpha e1."""
    nx = np.sqrt(x * x + y * y + z * z)
    if nx == 0.0:
        return None
    v0 = x + np.copysign(nx, x if x != 0.0 else 1.0)
    v = np.array([v0, y, z])
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return None
    return v / nv


def dense_eigen_real_schur(M, max_sweep_factor=100):
    """All eigenvalues of a real square matrix via the real Schur form.

    Balancing, Householder reduction to Hessenberg form, then implicit
    double-shift QR with deflation; eigenvalues are read off the final
    1x1 and 2x2 diagonal blocks.  Capped at order 400.
    """
    a = np.array(M, dtype=np.float64, copy=True)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("matrix must be square")
    if n > DENSE_EIG_MAX_ORDER:
        raise ValueError(f"order {n} exceeds the dense eigensolver cap {DENSE_EIG_MAX_ORDER}")
    if n == 0:
        return Spectrum(np.empty(0, dtype=np.complex128), COMPUTED_DENSE, 0)
    if n == 1:
        return Spectrum(np.array([a[0, 0]], dtype=np.complex128), COMPUTED_DENSE, 1)
    _balance(a)
    h = _hessenberg(a)
    anorm = float(np.linalg.norm(h))
    # Normwise deflation floor: a subdiagonal at the roundoff level of the
    # whole matrix is indistinguishable from zero, since every QR sweep
    # perturbs at that scale.  Tightly clustered spectra leave the sweep
    # numerically idle with subdiagonals hovering slightly above the
    # floor, so the floor is escalated while no deflation happens (reset
    # on progress); total growth stays bounded by 2^16 eps ||H||.
    floor = 2.0 * _EPS * anorm
    eig = []
    hi = n - 1
    sweeps = 0
    max_sweeps = max_sweep_factor * n
    stagnation = 0
    while hi >= 0:
        eff_floor = floor * float(2 ** min(stagnation // 10, 16))
        # deflate small subdiagonals inside the active window
        lo = hi
        while lo > 0:
            sub = abs(h[lo, lo - 1])
            if sub <= _EPS * (abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])) or sub <= eff_floor:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eig.append(complex(h[hi, hi]))
            hi -= 1
            stagnation = 0
            continue
        if lo == hi - 1:
            l1, l2 = _eig_2x2(h[lo, lo], h[lo, hi], h[hi, lo], h[hi, hi])
            eig.extend([l1, l2])
            hi -= 2
            stagnation = 0
            continue
        sweeps += 1
        stagnation += 1
        if sweeps > max_sweeps:
            raise RuntimeError(
                f"QR iteration failed to converge within {max_sweeps} sweeps; "
                f"{len(eig)} of {n} eigenvalues were deflated"
            )
        if stagnation % 10 == 0:
            # exceptional shift built from the two trailing subdiagonals
            s = abs(h[hi, hi - 1]) + abs(h[hi - 1, hi - 2])
            h11 = 0.75 * s + h[hi, hi]
            shift_sum = 2.0 * h11
            shift_prod = h11 * h11 + 0.4375 * s * s
        else:
            shift_sum = h[hi - 1, hi - 1] + h[hi, hi]
            shift_prod = h[hi - 1, hi - 1] * h[hi, hi] - h[hi - 1, hi] * h[hi, hi - 1]
        # first column of (H - s1)(H - s2) e1 on the active window
        x = h[lo, lo] * h[lo, lo] + h[lo, lo + 1] * h[lo + 1, lo] - shift_sum * h[lo, lo] + shift_prod
        y = h[lo + 1, lo] * (h[lo, lo] + h[lo + 1, lo + 1] - shift_sum)
        z = h[lo + 2, lo + 1] * h[lo + 1, lo]
        for k in range(lo, hi - 1):
            v = _house3(x, y, z)
            if v is not None:
                r0 = max(lo, k - 1)
                block = h[k:k + 3, r0:hi + 1]
                block -= 2.0 * np.outer(v, v @ block)
                c1 = min(hi, k + 3)
                block = h[lo:c1 + 1, k:k + 3]
                block -= 2.0 * np.outer(block @ v, v)
            if k + 3 <= hi:
                x, y, z = h[k + 1, k], h[k + 2, k], h[k + 3, k]
            else:
                x, y, z = h[k + 1, k], h[k + 2, k], 0.0
        # trailing 2x2 rotation of the bulge
        v = _house3(x, y, 0.0)
        if v is not None:
            v2 = v[:2]
            r0 = max(lo, hi - 2)
            block = h[hi - 1:hi + 1, r0:hi + 1]
            block -= 2.0 * np.outer(v2, v2 @ block)
            block = h[lo:hi + 1, hi - 1:hi + 1]
            block -= 2.0 * np.outer(block @ v2, v2)
    return Spectrum(np.array(eig, dtype=np.complex128), COMPUTED_DENSE, n)


# -- operator spectra ------------------------------------------------------


def power_spectral_radius(op, iters=100, restarts=5, seed=20240613):
    """Power-iteration estimate of the spectral radius (lower biased).

    The best estimate over ``restarts`` fixed-seed random starts of the
    growth ratio after ``iters`` applications.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        v = rng.standard_normal(op.dim)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v /= nv
        ratio = 0.0
        for _ in range(iters):
            w = op(v)
            nw = np.linalg.norm(w)
            if nw == 0.0:
                ratio = 0.0
                break
            ratio = nw
            v = w / nw
        best = max(best, ratio)
    return best


def dense_operator_matrix(op, cap=None):
    """Materialize a LinearOperator by column probes."""
    limit = dense_cap() if cap is None else cap
    if op.dim * op.dim > limit:
        raise ValueError("operator too large to materialize densely")
    out = np.empty((op.dim, op.dim))
    e = np.zeros(op.dim)
    for j in range(op.dim):
        e[j] = 1.0
        out[:, j] = op(e)
        e[j] = 0.0
    return out


def gamma_dense(sys, alpha, beta):
    """Dense iteration matrix I - M^{-1} A built with exact inner solves."""
    spec = PrecondSpec("mgss", alpha=alpha, beta=beta, inner="direct")
    prec = MgssApplicator(sys, spec)
    ad = to_dense(assemble_block_saddle(sys))
    return np.eye(sys.order) - prec.apply(ad)


def mgss_preconditioned_dense(sys, alpha, beta):
    spec = PrecondSpec("mgss", alpha=alpha, beta=beta, inner="direct")
    prec = MgssApplicator(sys, spec)
    return prec.apply(to_dense(assemble_block_saddle(sys)))


def rmgss_preconditioned_dense(sys, beta):
    spec = PrecondSpec("rmgss", beta=beta, inner="direct")
    prec = MgssApplicator(sys, spec)
    return prec.apply(to_dense(assemble_block_saddle(sys)))


def predicted_rmgss_spectrum(sys, beta):
    """Predicted spectrum of the rmgss-preconditioned matrix.

    The multiset {1 with multiplicity n} plus mu_i / (beta + mu_i),
    where mu_i are the eigenvalues of G = C + B A^{-1} B^T.  G is
    formed densely through a Cholesky factorization of A.
    """
    n, m = sys.n, sys.m
    if n * n > dense_cap():
        raise ValueError("system too large to form G densely")
    lams = [1.0] * n
    if m:
        Ad = to_dense(sys.A)
        Bd = to_dense(sys.B)
        fac = factor.cholesky_dense(Ad)
        G = to_dense(sys.C) + Bd @ factor.solve(fac, Bd.T)
        G = 0.5 * (G + G.T)
        mu, _ = jacobi_symmetric(G)
        lams.extend(mu_i / (beta + mu_i) for mu_i in mu)
    return Spectrum(np.array(lams, dtype=np.complex128), PREDICTED, n + m)


def iteration_matrix_check(sys, alpha, beta):
    """Spectral radius of the iteration matrix and distances to +-1.

    Computes the full dense spectrum of I - M^{-1} A (exact inner
    solves) and reports max |lambda| together with the minimum distance
    of any eigenvalue to +1 and to -1.
    """
    if sys.order > DENSE_EIG_MAX_ORDER:
        raise ValueError("system order exceeds the dense eigensolver cap")
    spec = dense_eigen_real_schur(gamma_dense(sys, alpha, beta))
    lam = spec.eigenvalues
    return {
        "rho": float(np.max(np.abs(lam))) if lam.size else 0.0,
        "min_dist_to_plus1": float(np.min(np.abs(lam - 1.0))) if lam.size else np.inf,
        "min_dist_to_minus1": float(np.min(np.abs(lam + 1.0))) if lam.size else np.inf,
    }
