"""Benchmark command line: generate, solve, sweep, spectrum, bench.

All commands are deterministic given identical inputs and seeds (wall
times excepted).  Timings cover the solver call only, never assembly
or factorization setup; the JSON/CSV records say so in their
``timing_scope`` field.  The process exits 0 only if every requested
solve converged.
"""

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import problems, spectral
from .krylov import StoppingRule, gmres_restarted, saddle_operator
from .precond import PrecondSpec, make_preconditioner
from .sparse import assemble_block_saddle, to_dense
from .stationary import run_mgss_iteration

TIMING_SCOPE = "solver call only"


@dataclass
class BenchRecord:
    problem: str
    method: str
    alpha: float
    beta: float
    it: int
    cpu: float
    converged: bool
    final_relres: float
    inner_iterations: int
    restart: int
    tol: float
    timing_scope: str = TIMING_SCOPE

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @staticmethod
    def csv_header():
        return "problem,method,alpha,beta,it,cpu,converged,final_relres,inner_iterations,restart,tol,timing_scope"

    def to_csv_row(self):
        d = asdict(self)
        return ",".join(
            [
                d["problem"],
                d["method"],
                f"{d['alpha']:.17g}",
                f"{d['beta']:.17g}",
                str(d["it"]),
                f"{d['cpu']:.6f}",
                str(d["converged"]).lower(),
                f"{d['final_relres']:.17g}",
                str(d["inner_iterations"]),
                str(d["restart"]),
                f"{d['tol']:.17g}",
                d["timing_scope"],
            ]
        )


class CliError(Exception):
    pass


def _kv_pairs(tokens, what):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise CliError(f"{what} expects key=value tokens, got {tok!r}")
        key, val = tok.split("=", 1)
        out[key] = val
    return out


def _make_spec(args):
    inner = getattr(args, "inner", "cg")
    if args.method == "mgss":
        return PrecondSpec("mgss", alpha=args.alpha, beta=args.beta, inner=inner)
    if args.method == "rmgss":
        return PrecondSpec("rmgss", beta=args.beta, inner=inner)
    if args.method == "hss":
        return PrecondSpec("hss", alpha=args.alpha, inner=inner)
    return PrecondSpec("none")


def _solve_once(sys_, problem_id, method, spec, restart, tol, max_outer, stationary=False):
    op = saddle_operator(sys_)
    b = sys_.rhs()
    rule = StoppingRule(rel_tol=tol, max_outer=max_outer, restart=restart)
    t0 = time.perf_counter()
    if stationary:
        report = run_mgss_iteration(sys_, spec, rule)
    elif spec.kind == "none":
        report = gmres_restarted(op, b, None, rule)
    else:
        prec = make_preconditioner(sys_, spec)
        report = gmres_restarted(op, b, prec, rule)
    cpu = time.perf_counter() - t0
    return BenchRecord(
        problem=problem_id,
        method=("stationary-" if stationary else "") + method,
        alpha=spec.alpha,
        beta=spec.beta,
        it=report.outer_iterations,
        cpu=cpu,
        converged=report.converged,
        final_relres=report.final_relative_residual,
        inner_iterations=report.total_inner_cg_iterations,
        restart=restart,
        tol=tol,
    )


# -- generate -------------------------------------------------------------


def cmd_generate(args):
    if (args.stokes is None) == (args.random is None):
        raise CliError("choose exactly one of --stokes or --random")
    if args.stokes is not None:
        kv = _kv_pairs(args.stokes, "--stokes")
        unknown = set(kv) - {"q", "stab"}
        if unknown:
            raise CliError(f"--stokes got unknown keys {sorted(unknown)}")
        if "q" not in kv:
            raise CliError("--stokes requires q=<cells per side>")
        cfg = problems.StokesConfig(
            int(kv["q"]),
            stab_param=float(kv.get("stab", 0.25)),
            pin_pressure=not args.no_pin,
        )
        sys_ = problems.generate_stokes_q1p0(cfg)
        meta = {
            "generator": "stokes-q1p0",
            "q": cfg.q,
            "stab_param": cfg.stab_param,
            "pin_pressure": cfg.pin_pressure,
        }
    else:
        kv = _kv_pairs(args.random, "--random")
        unknown = set(kv) - {"n", "m", "seed", "density"}
        if unknown:
            raise CliError(f"--random got unknown keys {sorted(unknown)}")
        for need in ("n", "m"):
            if need not in kv:
                raise CliError(f"--random requires {need}=<count>")
        n, m = int(kv["n"]), int(kv["m"])
        seed = int(kv.get("seed", 0))
        density = float(kv.get("density", 0.3))
        sys_ = problems.generate_random_saddle(n, m, density=density, seed=seed)
        meta = {"generator": "random", "seed": seed, "density": density}
    problems.save_bundle(sys_, args.out, meta)
    print(f"wrote bundle to {args.out} (n={sys_.n}, m={sys_.m})")
    return 0


# -- solve ----------------------------------------------------------------


def cmd_solve(args):
    sys_, meta = problems.load_bundle(args.indir)
    if args.stationary and args.method != "mgss":
        raise CliError("--stationary runs the mgss splitting scheme; use --method mgss")
    spec = _make_spec(args)
    record = _solve_once(
        sys_,
        problem_id=meta.get("generator", "bundle") + f":{os.path.basename(os.path.normpath(args.indir))}",
        method=args.method,
        spec=spec,
        restart=args.restart,
        tol=args.tol,
        max_outer=args.max_outer,
        stationary=args.stationary,
    )
    print(record.to_json())
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(BenchRecord.csv_header() + "\n")
            fh.write(record.to_csv_row() + "\n")
    return 0 if record.converged else 1


# -- sweep ----------------------------------------------------------------


def _parse_grid(text, what):
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"{what} expects start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise CliError(f"{what}: malformed grid {text!r}") from exc
    if count < 1:
        raise CliError(f"{what}: grid must contain at least one point")
    return np.linspace(start, stop, count)


def cmd_sweep(args):
    sys_, meta = problems.load_bundle(args.indir)
    problem_id = meta.get("generator", "bundle")
    alphas = _parse_grid(args.alpha_grid, "--alpha-grid") if args.alpha_grid else None
    betas = _parse_grid(args.beta_grid, "--beta-grid") if args.beta_grid else None
    if args.method == "mgss":
        if alphas is None or betas is None:
            raise CliError("mgss sweeps need --alpha-grid and --beta-grid")
        points = [(a, b) for a in alphas for b in betas]
    elif args.method == "rmgss":
        if betas is None:
            raise CliError("rmgss sweeps need --beta-grid")
        points = [(0.0, b) for b in betas]
    elif args.method == "hss":
        if alphas is None:
            raise CliError("hss sweeps need --alpha-grid")
        points = [(a, 0.0) for a in alphas]
    else:
        raise CliError("sweeping the unpreconditioned solver has no parameters")
    records = []
    for a, b in points:
        ns = argparse.Namespace(method=args.method, alpha=a, beta=b, inner=args.inner)
        spec = _make_spec(ns)
        records.append(
            _solve_once(sys_, problem_id, args.method, spec, args.restart, args.tol, args.max_outer)
        )
    best = None
    for idx, rec in enumerate(records):
        if not rec.converged:
            continue
        # ties resolve to the earliest grid point so reruns agree
        if best is None or rec.it < records[best].it:
            best = idx
    lines = [BenchRecord.csv_header() + ",optimal"]
    for idx, rec in enumerate(records):
        lines.append(rec.to_csv_row() + (",true" if idx == best else ",false"))
    text = "\n".join(lines) + "\n"
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(text)
    print(text, end="")
    return 0 if all(r.converged for r in records) else 1


# -- spectrum -------------------------------------------------------------

_OPERATORS = ("saddle", "mgss-prec", "rmgss-prec", "gamma", "rmgss-predicted")


def cmd_spectrum(args):
    sys_, _ = problems.load_bundle(args.indir)
    if sys_.order > spectral.DENSE_EIG_MAX_ORDER:
        raise CliError(
            f"operator order {sys_.order} exceeds the dense cap "
            f"{spectral.DENSE_EIG_MAX_ORDER}; use a smaller grid"
        )
    if args.operator == "saddle":
        spec = spectral.dense_eigen_real_schur(to_dense(assemble_block_saddle(sys_)))
    elif args.operator == "mgss-prec":
        _need(args, "alpha", "beta")
        spec = spectral.dense_eigen_real_schur(
            spectral.mgss_preconditioned_dense(sys_, args.alpha, args.beta)
        )
    elif args.operator == "rmgss-prec":
        _need(args, "beta")
        spec = spectral.dense_eigen_real_schur(
            spectral.rmgss_preconditioned_dense(sys_, args.beta)
        )
    elif args.operator == "gamma":
        _need(args, "alpha", "beta")
        spec = spectral.dense_eigen_real_schur(spectral.gamma_dense(sys_, args.alpha, args.beta))
    else:
        _need(args, "beta")
        spec = spectral.predicted_rmgss_spectrum(sys_, args.beta)
    spec.save_csv(args.csv)
    gp_path = args.gnuplot or (os.path.splitext(args.csv)[0] + ".gp")
    _write_gnuplot(gp_path, args.csv, args.operator)
    print(f"wrote {len(spec)} eigenvalues to {args.csv} and plot script to {gp_path}")
    return 0


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise CliError(f"--operator {args.operator} requires --{name}")


def _write_gnuplot(path, csv_path, title):
    rel = os.path.relpath(csv_path, os.path.dirname(path) or ".")
    with open(path, "w") as fh:
        fh.write(
            "\n".join(
                [
                    f"set title 'eigenvalue distribution: {title}'",
                    "set xlabel 'Re'",
                    "set ylabel 'Im'",
                    "set grid",
                    "set datafile separator ','",
                    f"plot '{rel}' every ::1 using 1:2 with points pt 7 ps 1 notitle",
                    "pause -1 'press enter to close'",
                    "",
                ]
            )
        )


# -- bench ----------------------------------------------------------------


def cmd_bench(args):
    grids = [int(tok) for tok in args.grids.split(",") if tok]
    methods = [tok for tok in args.methods.split(",") if tok]
    if not grids:
        raise CliError("--grids must name at least one grid size")
    if not methods:
        raise CliError("--methods must name at least one method")
    for meth in methods:
        if meth not in ("none", "mgss", "rmgss", "hss"):
            raise CliError(f"unknown method {meth!r}")
    records = []
    for q in grids:
        cfg = problems.StokesConfig(q, pin_pressure=not args.no_pin)
        sys_ = problems.generate_stokes_q1p0(cfg)
        pid = f"stokes-{q}x{q}"
        for meth in methods:
            alpha = args.hss_alpha if meth == "hss" else args.alpha
            ns = argparse.Namespace(method=meth, alpha=alpha, beta=args.beta, inner=args.inner)
            spec = _make_spec(ns)
            records.append(
                _solve_once(sys_, pid, meth, spec, args.restart, args.tol, args.max_outer)
            )
    widths = (14, 18, 10, 10, 6, 10, 10)
    headers = ("problem", "method", "alpha", "beta", "IT", "CPU", "converged")
    def fmt(cells):
        return "  ".join(str(c).ljust(w) for c, w in zip(cells, widths))
    print(fmt(headers))
    print(fmt(tuple("-" * w for w in widths)))
    for rec in records:
        print(
            fmt(
                (
                    rec.problem,
                    rec.method,
                    f"{rec.alpha:g}",
                    f"{rec.beta:g}",
                    rec.it,
                    f"{rec.cpu:.3f}",
                    rec.converged,
                )
            )
        )
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(BenchRecord.csv_header() + "\n")
            for rec in records:
                fh.write(rec.to_csv_row() + "\n")
    return 0 if all(r.converged for r in records) else 1


# -- parser ---------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sadprec",
        description="saddle point preconditioner benchmarks (mgss, rmgss, hss)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a saddle system bundle")
    p.add_argument("--stokes", nargs="+", metavar="KEY=VAL", help="q=16 [stab=0.25]")
    p.add_argument("--random", nargs="+", metavar="KEY=VAL", help="n=10 m=4 [seed=0 density=0.3]")
    p.add_argument("--no-pin", action="store_true", help="keep the singular unpinned pressure space")
    p.add_argument("--out", required=True, help="output bundle directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one bundle and print a JSON record")
    p.add_argument("--in", dest="indir", required=True, help="bundle directory")
    p.add_argument("--method", choices=("none", "mgss", "rmgss", "hss"), required=True)
    p.add_argument("--alpha", type=float, default=0.001)
    p.add_argument("--beta", type=float, default=0.001)
    p.add_argument("--restart", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-outer", type=int, default=2000)
    p.add_argument("--inner", choices=("cg", "direct"), default="cg")
    p.add_argument("--stationary", action="store_true", help="run the splitting iteration instead of GMRES")
    p.add_argument("--csv", help="also write the record as CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="parameter sweep, CSV output with the optimum marked")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--method", choices=("none", "mgss", "rmgss", "hss"), required=True)
    p.add_argument("--alpha-grid", help="start:stop:count")
    p.add_argument("--beta-grid", help="start:stop:count")
    p.add_argument("--restart", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-outer", type=int, default=2000)
    p.add_argument("--inner", choices=("cg", "direct"), default="cg")
    p.add_argument("--csv", help="write the sweep table to this file")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectrum", help="export an eigenvalue scatter as CSV plus gnuplot script")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--operator", choices=_OPERATORS, required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--csv", default="spectrum.csv")
    p.add_argument("--gnuplot", help="plot script path (default: csv path with .gp)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("bench", help="grid x method comparison table")
    p.add_argument("--grids", required=True, help="comma list, e.g. 4,8,16")
    p.add_argument("--methods", required=True, help="comma list from none,mgss,rmgss,hss")
    p.add_argument("--alpha", type=float, default=0.001)
    p.add_argument("--beta", type=float, default=0.001)
    p.add_argument("--hss-alpha", type=float, default=0.1)
    p.add_argument("--restart", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-outer", type=int, default=2000)
    p.add_argument("--inner", choices=("cg", "direct"), default="cg")
    p.add_argument("--no-pin", action="store_true")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
