"""Walk through every preconditioner on a 2x2 toy saddle system.

The system is A=[2], B=[1], C=[0], so the block operator is
[[2, 1], [-1, 0]] and everything can be checked against hand
arithmetic.
"""

import numpy as np

from sadprec import (
    CsrMatrix,
    PrecondSpec,
    SaddleSystem,
    assemble_block_saddle,
    dense_preconditioner_matrix,
    make_preconditioner,
    to_dense,
)

sys_ = SaddleSystem(
    CsrMatrix.from_dense([[2.0]]),
    CsrMatrix.from_dense([[1.0]]),
    CsrMatrix.zeros(1, 1),
    np.array([1.0]),
    np.array([0.0]),
)

print("block operator:")
print(to_dense(assemble_block_saddle(sys_)))
print("right-hand side (f; -g):", sys_.rhs())

r = np.array([1.0, 0.0])
for spec in (
    PrecondSpec("mgss", alpha=1.0, beta=1.0, inner="direct"),
    PrecondSpec("rmgss", beta=1.0, inner="direct"),
    PrecondSpec("hss", alpha=1.0, inner="direct"),
):
    app = make_preconditioner(sys_, spec)
    z = app.apply(r)
    P = dense_preconditioner_matrix(sys_, spec)
    print(f"\n{spec.kind}: P^-1 r = {z}")
    print(f"   reconstruction P @ z = {P @ z}   (should reproduce {r})")

# the relaxed preconditioner clusters the spectrum at 1: here the two
# eigenvalues are exactly {1, mu/(beta+mu)} = {1, 1/3}
from sadprec import dense_eigen_real_schur, predicted_rmgss_spectrum
from sadprec.spectral import rmgss_preconditioned_dense

psi = rmgss_preconditioned_dense(sys_, beta=1.0)
print("\npreconditioned spectrum (computed): ", dense_eigen_real_schur(psi).eigenvalues)
print("preconditioned spectrum (predicted):", predicted_rmgss_spectrum(sys_, 1.0).eigenvalues)
