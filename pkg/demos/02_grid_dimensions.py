"""Matrix properties of the stabilized Q1-P0 Stokes discretization.

Prints the dimensions and block sparsity per grid, the analogue of a
matrix-properties table for this test problem family.
"""

from sadprec import StokesConfig, generate_stokes_q1p0

print(f"{'grid':>10} {'n':>7} {'m':>7} {'nnz(A)':>9} {'nnz(B)':>9} {'nnz(C)':>9}")
for q in (4, 8, 16, 32):
    sys_ = generate_stokes_q1p0(StokesConfig(q, pin_pressure=False))
    print(
        f"{q:>7}x{q:<2} {sys_.n:>7} {sys_.m:>7} "
        f"{sys_.A.nnz:>9} {sys_.B.nnz:>9} {sys_.C.nnz:>9}"
    )

print("\npinning removes the constant-pressure null vector:")
for q in (4, 8):
    pinned = generate_stokes_q1p0(StokesConfig(q))
    print(f"  q={q}: m drops to {pinned.m} (from {q * q}), order {pinned.order}")
