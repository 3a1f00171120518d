"""Test problem generation and Matrix Market persistence.

The main generator discretizes the lid-free Stokes flow

    -laplace(u) + grad(p) = 0,   div(u) = 0   on [-1, 1]^2

with stabilized Q1-P0 elements on a uniform q x q grid of squares,
Dirichlet velocity data everywhere on the boundary taken from the
interpolant of the smooth solenoidal field

    u = (20 x y^3, 5 x^4 - 5 y^4),   p = 60 x^2 y - 20 y^3 + const.

Boundary conditions are imposed symmetrically: boundary rows and
columns of the vector Laplacian are cleared to the identity, the
eliminated couplings move to the right-hand side, and the boundary
columns of the divergence matrix are cleared.  The velocity dimension
stays n = 2 (q+1)^2 and the pressure dimension m = q^2 (one pressure
unknown is pinned by default because the enclosed-flow operator has
the constant pressure in its null space).
"""

import json
import os

import numpy as np

from .sparse import CsrMatrix, SaddleSystem

__all__ = [
    "StokesConfig",
    "generate_stokes_q1p0",
    "stokes_velocity_interpolant",
    "generate_random_saddle",
    "read_matrix_market",
    "write_matrix_market",
    "read_vector",
    "write_vector",
    "save_bundle",
    "load_bundle",
    "MatrixMarketError",
]

# Q1 element stiffness of the scalar Laplacian on a square, corner
# order SW, SE, NE, NW (independent of the mesh width in 2-D)
_K_LOC = np.array(
    [
        [4.0, -1.0, -2.0, -1.0],
        [-1.0, 4.0, -1.0, -2.0],
        [-2.0, -1.0, 4.0, -1.0],
        [-1.0, -2.0, -1.0, 4.0],
    ]
) / 6.0

# signs of the element integrals of d(phi)/dx and d(phi)/dy, same corner order
_SX = np.array([-1.0, 1.0, 1.0, -1.0])
_SY = np.array([-1.0, -1.0, 1.0, 1.0])

# pressure-jump coupling of one 2x2 macroelement, elements ordered
# cyclically SW, SE, NE, NW (a 4-cycle graph Laplacian)
_C_LOC = np.array(
    [
        [2.0, -1.0, 0.0, -1.0],
        [-1.0, 2.0, -1.0, 0.0],
        [0.0, -1.0, 2.0, -1.0],
        [-1.0, 0.0, -1.0, 2.0],
    ]
)


class StokesConfig:
    """Grid resolution and stabilization settings for the Stokes generator."""

    def __init__(self, q, stab_param=0.25, pin_pressure=True):
        q = int(q)
        if q < 2 or q % 2:
            raise ValueError("q must be an even integer >= 2 (macroelements need 2x2 tiles)")
        self.q = q
        self.stab_param = float(stab_param)
        self.pin_pressure = bool(pin_pressure)


def _exact_velocity(x, y):
    return 20.0 * x * y**3, 5.0 * x**4 - 5.0 * y**4


def stokes_velocity_interpolant(q):
    """Nodal interpolant of the exact velocity, length 2 (q+1)^2."""
    coords = np.linspace(-1.0, 1.0, q + 1)
    X, Y = np.meshgrid(coords, coords, indexing="xy")
    ux, uy = _exact_velocity(X.ravel(), Y.ravel())
    return np.concatenate([ux, uy])


def generate_stokes_q1p0(cfg):
    """Assemble the stabilized Q1-P0 Stokes saddle point system."""
    q = cfg.q
    h = 2.0 / q
    nv = (q + 1) ** 2
    n = 2 * nv
    m = q * q

    def node(i, j):
        return j * (q + 1) + i

    coords = np.linspace(-1.0, 1.0, q + 1)
    on_boundary = np.zeros(nv, dtype=bool)
    for j in range(q + 1):
        for i in range(q + 1):
            if i == 0 or i == q or j == 0 or j == q:
                on_boundary[node(i, j)] = True
    ux_b = np.zeros(nv)
    uy_b = np.zeros(nv)
    for j in range(q + 1):
        for i in range(q + 1):
            k = node(i, j)
            if on_boundary[k]:
                ux_b[k], uy_b[k] = _exact_velocity(coords[i], coords[j])

    a_rows, a_cols, a_vals = [], [], []
    b_rows, b_cols, b_vals = [], [], []
    f = np.zeros(n)
    g = np.zeros(m)
    for ey in range(q):
        for ex in range(q):
            elem = ey * q + ex
            nodes = [node(ex, ey), node(ex + 1, ey), node(ex + 1, ey + 1), node(ex, ey + 1)]
            for a in range(4):
                ia = nodes[a]
                if not on_boundary[ia]:
                    # divergence row, both velocity components
                    b_rows.extend((elem, elem))
                    b_cols.extend((ia, nv + ia))
                    b_vals.extend((_SX[a] * h / 2.0, _SY[a] * h / 2.0))
                else:
                    # eliminated divergence coupling of the known boundary
                    # velocity; keeping it in g preserves the consistency
                    # of the constraint (and hence convergence under
                    # refinement) after the columns are cleared
                    g[elem] -= _SX[a] * h / 2.0 * ux_b[ia] + _SY[a] * h / 2.0 * uy_b[ia]
                for b in range(4):
                    ib = nodes[b]
                    k = _K_LOC[a, b]
                    if on_boundary[ia]:
                        continue
                    if on_boundary[ib]:
                        # eliminated coupling moves to the right-hand side
                        f[ia] -= k * ux_b[ib]
                        f[nv + ia] -= k * uy_b[ib]
                    else:
                        a_rows.extend((ia, nv + ia))
                        a_cols.extend((ib, nv + ib))
                        a_vals.extend((k, k))
    bnd = np.flatnonzero(on_boundary)
    a_rows.extend(bnd)
    a_cols.extend(bnd)
    a_vals.extend(np.ones(bnd.size))
    a_rows.extend(nv + bnd)
    a_cols.extend(nv + bnd)
    a_vals.extend(np.ones(bnd.size))
    f[bnd] = ux_b[bnd]
    f[nv + bnd] = uy_b[bnd]

    c_rows, c_cols, c_vals = [], [], []
    scale = cfg.stab_param * h * h / 4.0
    for ty in range(q // 2):
        for tx in range(q // 2):
            tile = [
                (2 * ty) * q + 2 * tx,
                (2 * ty) * q + 2 * tx + 1,
                (2 * ty + 1) * q + 2 * tx + 1,
                (2 * ty + 1) * q + 2 * tx,
            ]
            for a in range(4):
                for b in range(4):
                    if _C_LOC[a, b] != 0.0:
                        c_rows.append(tile[a])
                        c_cols.append(tile[b])
                        c_vals.append(scale * _C_LOC[a, b])

    if cfg.pin_pressure:
        pin = m - 1
        keep_b = [k for k in range(len(b_rows)) if b_rows[k] != pin]
        b_rows = [b_rows[k] for k in keep_b]
        b_cols = [b_cols[k] for k in keep_b]
        b_vals = [b_vals[k] for k in keep_b]
        keep_c = [k for k in range(len(c_rows)) if c_rows[k] != pin and c_cols[k] != pin]
        c_rows = [c_rows[k] for k in keep_c]
        c_cols = [c_cols[k] for k in keep_c]
        c_vals = [c_vals[k] for k in keep_c]
        g = g[:-1]
        m -= 1

    A = CsrMatrix.from_triplets(n, n, a_rows, a_cols, a_vals)
    B = CsrMatrix.from_triplets(m, n, b_rows, b_cols, b_vals)
    C = CsrMatrix.from_triplets(m, m, c_rows, c_cols, c_vals)
    return SaddleSystem(A, B, C, f, g)


def generate_random_saddle(n, m, density=0.3, seed=0):
    """Random saddle system with guaranteed block properties.

    A = W W^T + n I for a sparse random W (positive definite), B has a
    positive diagonal in its left m x m block (full row rank), and
    C = V V^T with rank floor(m/2) (genuinely semidefinite).  Fixed
    seeds give bitwise identical systems.
    """
    if m > n:
        raise ValueError("m <= n is required")
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((n, n)) * (rng.random((n, n)) < density)
    Ad = W @ W.T + n * np.eye(n)
    Ad = 0.5 * (Ad + Ad.T)
    Bd = np.zeros((m, n))
    if m:
        Bd[:, :m] = np.diag(rng.uniform(0.5, 1.5, size=m))
        if n > m:
            E = rng.standard_normal((m, n - m)) * (rng.random((m, n - m)) < density)
            Bd[:, m:] = E
    V = rng.standard_normal((m, m // 2)) if m else np.zeros((0, 0))
    Cd = V @ V.T if m else np.zeros((0, 0))
    Cd = 0.5 * (Cd + Cd.T)
    f = rng.standard_normal(n)
    g = rng.standard_normal(m)
    return SaddleSystem(
        CsrMatrix.from_dense(Ad),
        CsrMatrix.from_dense(Bd),
        CsrMatrix.from_dense(Cd),
        f,
        g,
    )


# -- Matrix Market and bundle I/O ------------------------------------------


class MatrixMarketError(ValueError):
    pass


def write_matrix_market(M, path, symmetric=False):
    """Write a CsrMatrix in coordinate format with 1-based indices.

    With ``symmetric`` only the lower triangle is stored; the matrix
    must then be exactly symmetric.  Values carry 17 significant
    digits, enough for an exact float64 round trip.
    """
    rows, cols, vals = M.to_triplets()
    kind = "general"
    if symmetric:
        Mt = M.transpose()
        if not (
            np.array_equal(M.row_ptr, Mt.row_ptr)
            and np.array_equal(M.col_idx, Mt.col_idx)
            and np.array_equal(M.values, Mt.values)
        ):
            raise MatrixMarketError("symmetric output requires an exactly symmetric matrix")
        keep = rows >= cols
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        kind = "symmetric"
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {kind}\n")
        fh.write(f"{M.nrows} {M.ncols} {rows.size}\n")
        for r, c, v in zip(rows, cols, vals):
            fh.write(f"{r + 1} {c + 1} {v:.17g}\n")


def read_matrix_market(path):
    """Read a coordinate-format Matrix Market file into a CsrMatrix."""
    with open(path, "r") as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixMarketError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket":
        raise MatrixMarketError(f"{path}:1: malformed Matrix Market header")
    obj, fmt, field, kind = (tok.lower() for tok in header[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"{path}:1: unsupported format '{obj} {fmt}' (need matrix coordinate)")
    if field != "real":
        raise MatrixMarketError(f"{path}:1: unsupported field '{field}' (need real)")
    if kind not in ("general", "symmetric"):
        raise MatrixMarketError(f"{path}:1: unsupported symmetry '{kind}'")
    idx = 1
    while idx < len(lines) and (lines[idx].startswith("%") or not lines[idx].strip()):
        idx += 1
    if idx >= len(lines):
        raise MatrixMarketError(f"{path}: missing size line")
    parts = lines[idx].split()
    if len(parts) != 3:
        raise MatrixMarketError(f"{path}:{idx + 1}: malformed size line")
    try:
        nrows, ncols, nnz = int(parts[0]), int(parts[1]), int(parts[2])
    except ValueError as exc:
        raise MatrixMarketError(f"{path}:{idx + 1}: malformed size line") from exc
    rows, cols, vals = [], [], []
    seen = 0
    for ln in range(idx + 1, len(lines)):
        text = lines[ln].strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if len(parts) != 3:
            raise MatrixMarketError(f"{path}:{ln + 1}: expected 'row col value'")
        try:
            r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise MatrixMarketError(f"{path}:{ln + 1}: non-numeric entry") from exc
        if not (1 <= r <= nrows and 1 <= c <= ncols):
            raise MatrixMarketError(f"{path}:{ln + 1}: index ({r}, {c}) out of range")
        rows.append(r - 1)
        cols.append(c - 1)
        vals.append(v)
        if kind == "symmetric" and r != c:
            rows.append(c - 1)
            cols.append(r - 1)
            vals.append(v)
        seen += 1
    if seen != nnz:
        raise MatrixMarketError(f"{path}: size line promised {nnz} entries, found {seen}")
    return CsrMatrix.from_triplets(nrows, ncols, rows, cols, vals)


def write_vector(x, path):
    with open(path, "w") as fh:
        for v in np.asarray(x, dtype=np.float64):
            fh.write(f"{v:.17g}\n")


def read_vector(path):
    with open(path, "r") as fh:
        return np.array([float(line) for line in fh if line.strip()], dtype=np.float64)


def save_bundle(sys, dirpath, meta=None):
    """Persist a SaddleSystem as A.mtx, B.mtx, C.mtx, f.vec, g.vec, meta.json."""
    os.makedirs(dirpath, exist_ok=True)
    write_matrix_market(sys.A, os.path.join(dirpath, "A.mtx"))
    write_matrix_market(sys.B, os.path.join(dirpath, "B.mtx"))
    write_matrix_market(sys.C, os.path.join(dirpath, "C.mtx"))
    write_vector(sys.f, os.path.join(dirpath, "f.vec"))
    write_vector(sys.g, os.path.join(dirpath, "g.vec"))
    record = {"n": sys.n, "m": sys.m}
    if meta:
        record.update(meta)
    with open(os.path.join(dirpath, "meta.json"), "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_bundle(dirpath):
    """Load a SaddleSystem bundle; returns (system, meta_dict)."""
    needed = ["A.mtx", "B.mtx", "C.mtx", "f.vec", "g.vec"]
    for name in needed:
        if not os.path.exists(os.path.join(dirpath, name)):
            raise FileNotFoundError(f"bundle {dirpath!r} is missing {name}")
    A = read_matrix_market(os.path.join(dirpath, "A.mtx"))
    B = read_matrix_market(os.path.join(dirpath, "B.mtx"))
    C = read_matrix_market(os.path.join(dirpath, "C.mtx"))
    f = read_vector(os.path.join(dirpath, "f.vec"))
    g = read_vector(os.path.join(dirpath, "g.vec"))
    meta_path = os.path.join(dirpath, "meta.json")
    meta = {}
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
    return SaddleSystem(A, B, C, f, g), meta
