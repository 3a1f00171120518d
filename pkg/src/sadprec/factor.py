"""Cholesky factorization of SPD matrices and triangular solves.

Two backends share one interface: a vectorized dense factorization for
matrices up to ``dense_cutoff`` rows and an up-looking sparse
factorization (elimination-tree reach, row by row) above it.  Reverse
Cuthill-McKee preordering is available for the sparse path; the default
is natural ordering because the shifted stabilization blocks this
module mostly factors are already tightly banded.
"""

import numpy as np

from .sparse import CsrMatrix, _check_symmetric, to_dense

__all__ = [
    "CholeskyFactor",
    "NotPositiveDefiniteError",
    "cholesky",
    "cholesky_dense",
    "solve",
    "reverse_cuthill_mckee",
]

_PIVOT_RTOL = 1e-14
DENSE_CUTOFF = 2000


class NotPositiveDefiniteError(ValueError):
    pass


class CholeskyFactor:
    """Lower-triangular factor L with optional symmetric permutation.

    Satisfies P M P^T = L L^T where P reorders by ``perm``; ``solve``
    applies the permutations internally.  Immutable after construction.
    """

    def __init__(self, kind, L, perm, size):
        self.kind = kind        # "dense" or "sparse"
        self.L = L              # ndarray or CsrMatrix
        self.perm = perm        # None for natural ordering
        self.size = size


def cholesky(M, ordering="natural", dense_cutoff=DENSE_CUTOFF):
    """Factor a symmetric positive definite CsrMatrix.

    Parameters
    ----------
    M : CsrMatrix
        Symmetric; symmetry is verified, definiteness is discovered
        through the pivots.
    ordering : str
        "natural" or "rcm" (reverse Cuthill-McKee).
    dense_cutoff : int
        Matrices with at most this many rows are factored densely.
        Pass 0 to force the sparse path.

    Raises
    ------
    NotPositiveDefiniteError
        On a pivot at or below 1e-14 times the largest diagonal entry.
    """
    if M.nrows != M.ncols:
        raise ValueError("matrix must be square")
    _check_symmetric(M, "matrix")
    n = M.nrows
    perm = None
    if ordering == "rcm":
        perm = reverse_cuthill_mckee(M)
    elif ordering != "natural":
        raise ValueError(f"unknown ordering {ordering!r}")
    if n <= dense_cutoff:
        a = to_dense(M)
        if perm is not None:
            a = a[np.ix_(perm, perm)]
        return CholeskyFactor("dense", _dense_lower(a), perm, n)
    return CholeskyFactor("sparse", _sparse_lower(M, perm), perm, n)


def cholesky_dense(a):
    """Dense-array entry point used for explicitly formed matrices."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    return CholeskyFactor("dense", _dense_lower(a.copy()), None, a.shape[0])


def solve(fac, b):
    """Solve M x = b given the factor of M; b may be a vector or columns."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != fac.size:
        raise ValueError(f"dimension mismatch: factor of size {fac.size}, rhs of length {b.shape[0]}")
    y = b[fac.perm] if fac.perm is not None else b.copy()
    if fac.kind == "dense":
        x = _dense_forward(fac.L, y)
        x = _dense_backward(fac.L, x)
    else:
        x = _sparse_forward(fac.L, y)
        x = _sparse_backward(fac.L, x)
    if fac.perm is not None:
        out = np.empty_like(x)
        out[fac.perm] = x
        return out
    return x


# -- dense backend ------------------------------------------------------


def _dense_lower(a):
    n = a.shape[0]
    if n == 0:
        return a
    max_diag = float(np.max(np.abs(np.diagonal(a)))) if n else 0.0
    tol = _PIVOT_RTOL * max(max_diag, 1.0)
    L = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - np.dot(L[j, :j], L[j, :j])
        if d <= tol:
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (pivot {d:.3e} at row {j})"
            )
        ljj = np.sqrt(d)
        L[j, j] = ljj
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / ljj
    return L


def _dense_forward(L, b):
    n = L.shape[0]
    x = b.copy()
    for i in range(n):
        if i:
            x[i] = x[i] - L[i, :i] @ x[:i]
        x[i] = x[i] / L[i, i]
    return x


def _dense_backward(L, b):
    n = L.shape[0]
    x = b.copy()
    for i in range(n - 1, -1, -1):
        if i + 1 < n:
            x[i] = x[i] - L[i + 1:, i] @ x[i + 1:]
        x[i] = x[i] / L[i, i]
    return x


# -- sparse backend (up-looking) -----------------------------------------


def _permuted_csr(M, perm):
    rows, cols, vals = M.to_triplets()
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return CsrMatrix.from_triplets(M.nrows, M.ncols, inv[rows], inv[cols], vals)


def _sparse_lower(M, perm):
    """Up-looking factorization; the elimination tree is grown on the fly."""
    A = _permuted_csr(M, perm) if perm is not None else M
    n = A.nrows
    max_diag = float(np.max(np.abs(A.diagonal()))) if n else 0.0
    tol = _PIVOT_RTOL * max(max_diag, 1.0)
    parent = np.full(n, -1, dtype=np.int64)
    stamp = np.full(n, -1, dtype=np.int64)
    x = np.zeros(n)
    lcols = [None] * n   # per-row column index arrays of L
    lvals = [None] * n
    for i in range(n):
        cols_i, vals_i = A.row(i)
        below = cols_i <= i
        cols_i, vals_i = cols_i[below], vals_i[below]
        d = 0.0
        pattern = []
        stamp[i] = i
        for j, a in zip(cols_i, vals_i):
            if j == i:
                d = a
                continue
            x[j] = a
            # climb the elimination tree to collect the reach of row i
            while stamp[j] != i:
                stamp[j] = i
                pattern.append(j)
                if parent[j] == -1:
                    parent[j] = i
                    break
                j = parent[j]
        pattern.sort()
        row_cols = np.empty(len(pattern) + 1, dtype=np.int64)
        row_vals = np.empty(len(pattern) + 1)
        for k, j in enumerate(pattern):
            cj, vj = lcols[j], lvals[j]
            v = x[j]
            if cj.size > 1:
                v -= np.dot(vj[:-1], x[cj[:-1]])
            v /= lvals[j][-1]
            x[j] = v
            row_cols[k] = j
            row_vals[k] = v
            d -= v * v
        if d <= tol:
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (pivot {d:.3e} at row {i})"
            )
        row_cols[-1] = i
        row_vals[-1] = np.sqrt(d)
        lcols[i] = row_cols
        lvals[i] = row_vals
        for j in pattern:
            x[j] = 0.0
    counts = np.array([c.size for c in lcols], dtype=np.int64)
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    col_idx = np.concatenate(lcols) if n else np.empty(0, dtype=np.int64)
    values = np.concatenate(lvals) if n else np.empty(0)
    return CsrMatrix(n, n, row_ptr, col_idx, values)


def _sparse_forward(L, b):
    x = b.copy()
    for i in range(L.nrows):
        cols, vals = L.row(i)
        if cols.size > 1:
            x[i] = x[i] - vals[:-1] @ x[cols[:-1]]
        x[i] = x[i] / vals[-1]
    return x


def _sparse_backward(L, b):
    x = b.copy()
    for i in range(L.nrows - 1, -1, -1):
        cols, vals = L.row(i)
        x[i] = x[i] / vals[-1]
        if cols.size > 1:
            x[cols[:-1]] -= np.multiply.outer(vals[:-1], x[i]) if x.ndim > 1 else vals[:-1] * x[i]
    return x


# -- reverse Cuthill-McKee ------------------------------------------------


def _adjacency(M):
    rows, cols, _ = M.to_triplets()
    off = rows != cols
    rows, cols = rows[off], cols[off]
    adj = [[] for _ in range(M.nrows)]
    for r, c in zip(rows, cols):
        adj[r].append(c)
    return [np.array(sorted(a), dtype=np.int64) for a in adj]


def _bfs_levels(adj, start, n):
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    frontier = [start]
    order = [start]
    last = start
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    nxt.append(v)
        if nxt:
            order.extend(nxt)
            last = nxt[-1]
        frontier = nxt
    return order, last, seen


def reverse_cuthill_mckee(M):
    """Symmetric bandwidth-reducing permutation (new index -> old index)."""
    if M.nrows != M.ncols:
        raise ValueError("matrix must be square")
    n = M.nrows
    adj = _adjacency(M)
    degree = np.array([a.size for a in adj])
    visited = np.zeros(n, dtype=bool)
    order = []
    for comp_seed in np.argsort(degree, kind="stable"):
        if visited[comp_seed]:
            continue
        # pseudo-peripheral start: two BFS passes from the low-degree seed
        _, far, _ = _bfs_levels(adj, int(comp_seed), n)
        start = far
        comp = [start]
        visited[start] = True
        queue = [start]
        while queue:
            u = queue.pop(0)
            nbrs = [v for v in adj[u] if not visited[v]]
            nbrs.sort(key=lambda v: (degree[v], v))
            for v in nbrs:
                visited[v] = True
                comp.append(v)
                queue.append(v)
        order.extend(comp)
    return np.array(order[::-1], dtype=np.int64)
