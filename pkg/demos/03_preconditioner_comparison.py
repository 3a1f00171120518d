"""Iteration-count comparison of GMRES(5) preconditioner choices.

Reproduces the benchmark protocol on Stokes grids: stopping criterion
||b - A x|| <= 1e-9 ||b||, zero initial guess, inner CG capped at a
factor-100 residual reduction or 40 steps.  The unpinned system is used
here (its right-hand side is compatible, so the Krylov iteration stays
in the range space), matching how exported discretizations are usually
benchmarked.
"""

import time

from sadprec import (
    PrecondSpec,
    StokesConfig,
    StoppingRule,
    generate_stokes_q1p0,
    gmres_restarted,
    make_preconditioner,
    saddle_operator,
)

CASES = [
    ("gmres(5)", None),
    ("mgss(0.01, 0.001)", PrecondSpec("mgss", 0.01, 0.001)),
    ("mgss(0.001, 0.001)", PrecondSpec("mgss", 0.001, 0.001)),
    ("rmgss(0.001)", PrecondSpec("rmgss", beta=0.001)),
    ("hss(0.1)", PrecondSpec("hss", alpha=0.1)),
]

for q in (8, 16):
    sys_ = generate_stokes_q1p0(StokesConfig(q, pin_pressure=False))
    op = saddle_operator(sys_)
    b = sys_.rhs()
    print(f"\nstokes {q}x{q} (order {sys_.order})")
    print(f"  {'method':<22} {'IT':>6} {'inner':>7} {'CPU':>8}  converged")
    for label, spec in CASES:
        prec = make_preconditioner(sys_, spec) if spec else None
        t0 = time.perf_counter()
        rep = gmres_restarted(op, b, prec, StoppingRule(1e-9, 4000, 5))
        cpu = time.perf_counter() - t0
        print(
            f"  {label:<22} {rep.outer_iterations:>6} "
            f"{rep.total_inner_cg_iterations:>7} {cpu:>7.2f}s  {rep.converged}"
        )
