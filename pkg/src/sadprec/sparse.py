"""CSR sparse matrices, saddle point block systems, and vector kernels.

Everything downstream (factorizations, Krylov solvers, preconditioners)
is built on the two containers defined here: ``CsrMatrix`` for sparse
storage and ``SaddleSystem`` for the 2x2 block system

    [[ A, B^T],      (x)   ( f)
     [-B, C  ]]  *   (y) = (-g)

with A symmetric positive definite, C symmetric positive semidefinite
and B of size m x n, m <= n.  All arithmetic is float64.
"""

import os

import numpy as np

__all__ = [
    "CsrMatrix",
    "SaddleSystem",
    "spmv",
    "spmv_transpose",
    "spmv_columns",
    "assemble_block_saddle",
    "add_scaled_identity",
    "to_dense",
    "dot",
    "norm2",
    "axpy",
    "dense_cap",
]

_DEFAULT_DENSE_CAP = 4_000_000


def dense_cap():
    """Maximum number of entries allowed in a dense conversion.

    Overridable through the SADPREC_DENSE_CAP environment variable.
    """
    env = os.environ.get("SADPREC_DENSE_CAP")
    if env:
        return int(float(env))
    return _DEFAULT_DENSE_CAP


class CsrMatrix:
    """Compressed sparse row matrix with canonical structure.

    Within each row the column indices are strictly increasing, there
    are no duplicate positions, and no explicitly stored zeros.  The
    arrays are never mutated after construction, so instances can be
    shared freely between threads.
    """

    def __init__(self, nrows, ncols, row_ptr, col_idx, values, validate=True):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self.row_ptr = np.ascontiguousarray(row_ptr, dtype=np.int64)
        self.col_idx = np.ascontiguousarray(col_idx, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self._row_of = None
        if validate:
            self._validate()

    # -- construction -------------------------------------------------

    @classmethod
    def from_triplets(cls, nrows, ncols, rows, cols, vals):
        """Build from COO triplets; duplicates are summed, exact zeros dropped."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("triplet arrays must have identical length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= nrows:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= ncols:
                raise ValueError("column index out of range")
            order = np.lexsort((cols, rows))
            rows, cols, vals = rows[order], cols[order], vals[order]
            new_group = np.empty(rows.size, dtype=bool)
            new_group[0] = True
            new_group[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new_group)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
            keep = vals != 0.0
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        counts = np.bincount(rows, minlength=nrows) if rows.size else np.zeros(nrows, dtype=np.int64)
        row_ptr = np.zeros(nrows + 1, dtype=np.int64)
        np.cumsum(counts, out=row_ptr[1:])
        return cls(nrows, ncols, row_ptr, cols, vals)

    @classmethod
    def from_dense(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        rows, cols = np.nonzero(arr)
        return cls.from_triplets(arr.shape[0], arr.shape[1], rows, cols, arr[rows, cols])

    @classmethod
    def identity(cls, n):
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    @classmethod
    def zeros(cls, nrows, ncols):
        return cls(nrows, ncols, np.zeros(nrows + 1, dtype=np.int64), [], [])

    # -- basic queries -------------------------------------------------

    @property
    def nnz(self):
        return self.values.size

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def to_triplets(self):
        return self._rows().copy(), self.col_idx.copy(), self.values.copy()

    def transpose(self):
        return CsrMatrix.from_triplets(self.ncols, self.nrows, self.col_idx, self._rows(), self.values)

    @property
    def T(self):
        return self.transpose()

    def diagonal(self):
        d = np.zeros(min(self.nrows, self.ncols))
        rows = self._rows()
        on_diag = rows == self.col_idx
        d[rows[on_diag]] = self.values[on_diag]
        return d

    def row(self, i):
        """Column indices and values of row i (views, do not mutate)."""
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        return self.col_idx[lo:hi], self.values[lo:hi]

    def toarray(self, cap=None):
        return to_dense(self, cap)

    def __matmul__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return spmv(self, x)
        return spmv_columns(self, x)

    def __repr__(self):
        return f"CsrMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"

    # -- internals -----------------------------------------------------

    def _rows(self):
        # expanded row index of every stored entry, cached lazily
        if self._row_of is None:
            self._row_of = np.repeat(
                np.arange(self.nrows, dtype=np.int64), np.diff(self.row_ptr)
            )
        return self._row_of

    def _validate(self):
        if self.nrows < 0 or self.ncols < 0:
            raise ValueError("negative dimension")
        if self.row_ptr.shape != (self.nrows + 1,):
            raise ValueError("row_ptr has wrong length")
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != self.col_idx.size:
            raise ValueError("row_ptr endpoints inconsistent with entry count")
        if np.any(np.diff(self.row_ptr) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if self.col_idx.size != self.values.size:
            raise ValueError("col_idx and values length mismatch")
        if self.col_idx.size:
            if self.col_idx.min() < 0 or self.col_idx.max() >= self.ncols:
                raise ValueError("column index out of range")
            # strictly increasing inside each row; jumps allowed only at row starts
            nondecr = np.diff(self.col_idx) > 0
            is_row_start = np.zeros(self.col_idx.size, dtype=bool)
            starts = self.row_ptr[1:-1]
            is_row_start[starts[starts < self.col_idx.size]] = True
            bad = ~nondecr & ~is_row_start[1:]
            if np.any(bad):
                raise ValueError("column indices not strictly increasing within a row")
        if np.any(self.values == 0.0):
            raise ValueError("explicitly stored zero entry")


def spmv(M, x):
    """Matrix-vector product M @ x.

    Stored entries of each row are accumulated left to right, so the
    result is bitwise reproducible for a fixed matrix.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (M.ncols,):
        raise ValueError(f"dimension mismatch: matrix is {M.nrows}x{M.ncols}, vector has length {x.size}")
    if M.nnz == 0:
        return np.zeros(M.nrows)
    return np.bincount(M._rows(), weights=M.values * x[M.col_idx], minlength=M.nrows)


def spmv_transpose(M, x):
    """Product M.T @ x without forming the transpose."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (M.nrows,):
        raise ValueError(f"dimension mismatch: matrix is {M.nrows}x{M.ncols}, vector has length {x.size}")
    if M.nnz == 0:
        return np.zeros(M.ncols)
    return np.bincount(M.col_idx, weights=M.values * x[M._rows()], minlength=M.ncols)


def spmv_columns(M, X, transpose=False):
    """Apply spmv (or its transpose) to every column of a 2-D array."""
    X = np.asarray(X, dtype=np.float64)
    op = spmv_transpose if transpose else spmv
    out = np.empty((M.ncols if transpose else M.nrows, X.shape[1]))
    for j in range(X.shape[1]):
        out[:, j] = op(M, X[:, j])
    return out


def add_scaled_identity(M, s):
    """Return M + s*I as a new CsrMatrix (square M)."""
    if M.nrows != M.ncols:
        raise ValueError("matrix must be square")
    rows, cols, vals = M.to_triplets()
    diag = np.arange(M.nrows, dtype=np.int64)
    return CsrMatrix.from_triplets(
        M.nrows,
        M.ncols,
        np.concatenate([rows, diag]),
        np.concatenate([cols, diag]),
        np.concatenate([vals, np.full(M.nrows, float(s))]),
    )


def to_dense(M, cap=None):
    """Dense ndarray copy of M; refuses matrices above the dense cap."""
    limit = dense_cap() if cap is None else cap
    if M.nrows * M.ncols > limit:
        raise ValueError(
            f"dense conversion of {M.nrows}x{M.ncols} exceeds cap of {limit} entries"
        )
    out = np.zeros((M.nrows, M.ncols))
    if M.nnz:
        out[M._rows(), M.col_idx] = M.values
    return out


def dot(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("dot of vectors with different lengths")
    return float(np.dot(x, y))


def norm2(x):
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64)))


def axpy(a, x, y):
    """a*x + y."""
    return float(a) * np.asarray(x, dtype=np.float64) + np.asarray(y, dtype=np.float64)


def _check_symmetric(M, name, rtol=1e-12):
    Mt = M.transpose()
    scale = float(np.max(np.abs(M.values))) if M.nnz else 0.0
    same_structure = (
        np.array_equal(M.row_ptr, Mt.row_ptr) and np.array_equal(M.col_idx, Mt.col_idx)
    )
    if not same_structure:
        raise ValueError(f"{name} is structurally non-symmetric")
    if M.nnz and float(np.max(np.abs(M.values - Mt.values))) > rtol * scale:
        raise ValueError(f"{name} is numerically non-symmetric beyond {rtol:g} relative")


class SaddleSystem:
    """Blocks and right-hand side of a saddle point system.

    The assembled operator is [[A, B^T], [-B, C]] acting on (x; y) with
    right-hand side (f; -g).  Symmetry of A and C is enforced here;
    definiteness is checked on demand (``check_spd_A``, ``check_spsd_C``)
    because it requires a factorization or sampling.
    """

    def __init__(self, A, B, C, f, g):
        if A.nrows != A.ncols:
            raise ValueError("A must be square")
        if C.nrows != C.ncols:
            raise ValueError("C must be square")
        if B.nrows != C.nrows or B.ncols != A.nrows:
            raise ValueError("B must be m x n with A n x n and C m x m")
        if C.nrows > A.nrows:
            raise ValueError("m <= n is required")
        _check_symmetric(A, "A")
        _check_symmetric(C, "C")
        self.A = A
        self.B = B
        self.C = C
        self.f = np.ascontiguousarray(f, dtype=np.float64)
        self.g = np.ascontiguousarray(g, dtype=np.float64)
        if self.f.shape != (A.nrows,) or self.g.shape != (C.nrows,):
            raise ValueError("right-hand side lengths do not match the blocks")

    @property
    def n(self):
        return self.A.nrows

    @property
    def m(self):
        return self.C.nrows

    @property
    def order(self):
        return self.n + self.m

    def rhs(self):
        return np.concatenate([self.f, -self.g])

    def matvec(self, u):
        """Apply the block operator without assembling it."""
        u = np.asarray(u, dtype=np.float64)
        x, y = u[: self.n], u[self.n:]
        top = spmv(self.A, x) + spmv_transpose(self.B, y)
        bot = -spmv(self.B, x) + spmv(self.C, y)
        return np.concatenate([top, bot])

    def check_spd_A(self):
        """Cholesky-based SPD check of A; raises if it fails."""
        from . import factor

        factor.cholesky(self.A)

    def check_spsd_C(self, samples=64, seed=0, tol=1e-10):
        rng = np.random.default_rng(seed)
        scale = float(np.max(np.abs(self.C.values))) if self.C.nnz else 1.0
        for _ in range(samples):
            x = rng.standard_normal(self.m)
            quad = float(np.dot(x, spmv(self.C, x)))
            if quad < -tol * scale * float(np.dot(x, x)):
                raise ValueError("C failed the positive semidefinite probe")


def assemble_block_saddle(sys):
    """Assemble the (n+m) x (n+m) CSR matrix [[A, B^T], [-B, C]]."""
    n, m = sys.n, sys.m
    ar, ac, av = sys.A.to_triplets()
    br, bc, bv = sys.B.to_triplets()
    cr, cc, cv = sys.C.to_triplets()
    rows = np.concatenate([ar, bc, br + n, cr + n])
    cols = np.concatenate([ac, br + n, bc, cc + n])
    vals = np.concatenate([av, bv, -bv, cv])
    return CsrMatrix.from_triplets(n + m, n + m, rows, cols, vals)
