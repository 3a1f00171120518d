"""Numerical verification of the convergence and clustering theory.

Three facts are checked on live matrices:

1. the stationary splitting iteration matrix has spectral radius
   below one for every positive shift pair (so the iteration always
   converges),
2. its eigenvalues never touch +1 or -1,
3. the relaxed preconditioned operator has eigenvalue 1 with
   multiplicity n, the rest at mu_i / (beta + mu_i), with cluster
   radius beta / (beta + mu_min) shrinking as beta shrinks.
"""

import numpy as np

from sadprec import (
    StokesConfig,
    generate_random_saddle,
    generate_stokes_q1p0,
    jacobi_symmetric,
    predicted_rmgss_spectrum,
    iteration_matrix_check,
)
from sadprec.spectral import dense_eigen_real_schur, rmgss_preconditioned_dense
from sadprec.sparse import to_dense

stokes = generate_stokes_q1p0(StokesConfig(4))
rand = generate_random_saddle(24, 10, seed=1)

print("spectral radius of the iteration matrix (must stay below 1):")
for alpha in (0.001, 0.1, 1.0, 10.0):
    row = []
    for beta in (0.001, 0.1, 1.0, 10.0):
        res = iteration_matrix_check(stokes, alpha, beta)
        assert res["rho"] < 1.0 and min(res["min_dist_to_plus1"], res["min_dist_to_minus1"]) > 0
        row.append(f"{res['rho']:.4f}")
    print(f"  alpha={alpha:<6} rho = {'  '.join(row)}")

print("\neigenvalue-1 multiplicity and the predicted tail (random system):")
beta = 0.01
computed = dense_eigen_real_schur(rmgss_preconditioned_dense(rand, beta)).eigenvalues
predicted = predicted_rmgss_spectrum(rand, beta).eigenvalues
print(f"  max |computed - predicted| = {np.max(np.abs(computed - predicted)):.2e}")
ones = np.sum(np.abs(computed - 1.0) < 1e-9)
print(f"  eigenvalues equal to 1: {ones} (n = {rand.n})")

print("\ncluster radius beta/(beta + mu_min) on stokes 4x4:")
G = to_dense(stokes.C) + to_dense(stokes.B) @ np.linalg.solve(
    to_dense(stokes.A), to_dense(stokes.B).T
)
mu, _ = jacobi_symmetric(0.5 * (G + G.T))
mu_min = float(np.min(mu))
for beta in (1.0, 0.1, 0.01, 0.001):
    lam = dense_eigen_real_schur(rmgss_preconditioned_dense(stokes, beta)).eigenvalues
    radius = np.sort(np.abs(lam - 1.0))[-1]
    print(f"  beta={beta:<6} radius {radius:.5f}  formula {beta / (beta + mu_min):.5f}")
