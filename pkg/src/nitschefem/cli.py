"""Experiment drivers: convergence tables, penalty sweeps, the outflow-layer
comparison, inf-sup probes and the verification suite.

Exit codes: 0 success, 1 check failure, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, assembly, io as fio, linalg, problems, verify
from .analysis import convergence_study, infsup_constant, make_mesh, solve_system
from .assembly import ProblemSpec
from .fespace import FeFunction, FeSpace

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _parse_beta(text: str):
    try:
        bx, by = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("beta must be 'FX,FY'")
    return (bx, by)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nitsche-fem",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--order", type=int, choices=(1, 2), default=1)
        p.add_argument("--mesh", choices=("structured", "jittered"),
                       default="jittered")
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--gamma", type=float, default=0.0)
        p.add_argument("--eps", type=float, default=1.0)
        p.add_argument("--beta", type=_parse_beta, default=(0.0, 0.0))
        p.add_argument("--sigma", type=float, default=0.0)
        p.add_argument("--stab", choices=("none", "sd", "cip"), default="none")
        p.add_argument("--gamma-sd", type=float, default=0.2)
        p.add_argument("--gamma-cip", type=float, default=0.005)
        p.add_argument("--bc", choices=("nitsche", "nitsche-sym", "strong"),
                       default="nitsche")
        p.add_argument("--solver", choices=("direct", "bicgstab"),
                       default="direct")
        p.add_argument("--out", type=Path, default=Path("out"))

    p = sub.add_parser("convergence", help="manufactured-solution rate study")
    common(p)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--n0", type=int, default=10)

    p = sub.add_parser("penalty-sweep", help="error vs boundary penalty")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--gammas", type=float, nargs="*",
                   default=[0.0, 10.0, 20.0, 40.0, 80.0])

    p = sub.add_parser("outflow", help="convection-dominated layer comparison")
    common(p)
    p.add_argument("--n", type=int, default=80)

    p = sub.add_parser("infsup", help="numerical inf-sup constants")
    common(p)
    p.add_argument("--n", type=int, nargs="*", default=[8, 12, 16])
    p.add_argument("--form", choices=("poisson_nitsche", "convdiff"),
                   default="poisson_nitsche")
    p.add_argument("--sym-compare", action="store_true")
    p.add_argument("--dense-cap", type=int, default=2000)

    p = sub.add_parser("verify", help="run the invariant self-checks")
    common(p)
    p.add_argument("--n", type=int, default=20)
    return ap


def _bc_mode(arg: str) -> str:
    return {"nitsche": "nitsche_nonsym", "nitsche-sym": "nitsche_sym",
            "strong": "strong"}[arg]


def _manifest(args, outdir: Path, extra: dict, t0: float) -> None:
    cfg = {k: (str(v) if isinstance(v, Path) else v)
           for k, v in vars(args).items()}
    data = {"config": cfg, "elapsed_s": round(time.perf_counter() - t0, 3)}
    data.update(extra)
    (outdir / "manifest.json").write_text(json.dumps(data, indent=2) + "\n")


def cmd_convergence(args) -> int:
    outdir = args.out
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    tables = {}
    for label, mode in (("nitsche", _bc_mode(args.bc)), ("strong", "strong")):
        p = problems.smooth_poisson(bc_mode=mode,
                                    gamma=args.gamma if mode != "strong" else 0.0)
        tables[label] = convergence_study(
            p, problems.smooth_u, problems.smooth_grad, args.order,
            mesh_kind=args.mesh, levels=args.levels, n0=args.n0,
            seed=args.seed, solver=args.solver)
        (outdir / f"convergence_{label}.csv").write_text(tables[label].to_csv())

    # side-by-side table in the layout of the published comparison
    lines = ["n,nitsche_h1,nitsche_h1_rate,strong_h1,strong_h1_rate,"
             "nitsche_l2,nitsche_l2_rate,strong_l2,strong_l2_rate"]
    for rn, rs in zip(tables["nitsche"].rows, tables["strong"].rows):
        fmt = lambda v: "" if v is None else (f"{v:.2f}" if v < 10 else f"{v:.2E}")
        lines.append(",".join([
            str(rn["n"]),
            f"{rn['h1_err']:.2E}", fmt(rn["h1_rate"]),
            f"{rs['h1_err']:.2E}", fmt(rs["h1_rate"]),
            f"{rn['l2_err']:.2E}", fmt(rn["l2_rate"]),
            f"{rs['l2_err']:.2E}", fmt(rs["l2_rate"])]))
    (outdir / "comparison.csv").write_text("\n".join(lines) + "\n")
    stats = make_mesh(tables["nitsche"].rows[-1]["n"], args.mesh,
                      seed=args.seed).stats()
    _manifest(args, outdir, {"mesh_stats": stats.as_dict()}, t0)
    return EXIT_OK


def cmd_penalty_sweep(args) -> int:
    outdir = args.out
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    n = args.n if args.n is not None else (80 if args.order == 1 else 40)
    mesh = make_mesh(n, args.mesh, seed=args.seed)
    space = FeSpace(mesh, args.order)
    rows = []
    for gamma in args.gammas:
        p = problems.smooth_poisson(bc_mode=_bc_mode(args.bc), gamma=gamma)
        system = assembly.assemble(space, p)
        uh = FeFunction(space, solve_system(system, args.solver))
        err = analysis.error_field(space, problems.smooth_u,
                                   problems.smooth_grad, uh)
        rows.append((gamma, analysis.norm(err, "L2"),
                     analysis.norm(err, "H1semi")))
    lines = ["gamma,l2_err,h1_err"]
    lines += [f"{g:g},{l2:.2E},{h1:.2E}" for g, l2, h1 in rows]
    (outdir / "penalty_sweep.csv").write_text("\n".join(lines) + "\n")
    extra = {"mesh_stats": mesh.stats().as_dict()}
    if len(rows) > 1:
        l2s = [r[1] for r in rows]
        extra["l2_max_min_ratio"] = max(l2s) / min(l2s)
    _manifest(args, outdir, extra, t0)
    return EXIT_OK


def cmd_outflow(args) -> int:
    outdir = args.out
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    mesh = make_mesh(args.n, args.mesh, seed=args.seed)
    space = FeSpace(mesh, args.order)
    p = problems.outflow_layer(args.eps, bc_mode=_bc_mode(args.bc),
                               stabilization=args.stab,
                               gamma_sd=args.gamma_sd, gamma_cip=args.gamma_cip)
    system = assembly.assemble(space, p)
    uh = FeFunction(space, solve_system(system, args.solver))
    tag = f"{_bc_mode(args.bc)}_{args.stab}_eps{args.eps:g}"
    fio.write_vtk(uh, outdir / f"outflow_{tag}.vtk")
    report = analysis.outflow_oscillation(uh, p.beta)
    (outdir / f"outflow_{tag}.json").write_text(json.dumps(report, indent=2) + "\n")
    _manifest(args, outdir, {"report": report,
                             "mesh_stats": mesh.stats().as_dict()}, t0)
    return EXIT_OK


def cmd_infsup(args) -> int:
    outdir = args.out
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    header = "n,h,c_s" + (",c_s_sym" if args.sym_compare else "")
    lines = [header]
    values = []
    for n in args.n:
        mesh = make_mesh(n, args.mesh, seed=args.seed)
        space = FeSpace(mesh, args.order)
        if space.n_dofs > args.dense_cap:
            print(f"error: n={n} gives {space.n_dofs} dofs, above the dense "
                  f"cap {args.dense_cap}; lower n or raise --dense-cap",
                  file=sys.stderr)
            return EXIT_CONFIG
        p = ProblemSpec(eps=args.eps, beta=args.beta, sigma=args.sigma,
                        f=problems.zero, g=problems.zero, gamma=args.gamma)
        cs, _ = infsup_constant(args.form, space, p, dense_cap=args.dense_cap)
        row = f"{n},{mesh.stats().h:.6E},{cs:.6E}"
        if args.sym_compare:
            ps = ProblemSpec(f=problems.zero, g=problems.zero,
                             bc_mode="nitsche_sym", gamma=args.gamma)
            A = assembly.assemble_poisson_nitsche(space, ps).matrix.toarray()
            M = analysis.gram_one_h(space).toarray()
            M = 0.5 * (M + M.T)
            S = A @ np.linalg.solve(M, A.T)
            lam, _ = linalg.smallest_generalized_eig(0.5 * (S + S.T), M)
            row += f",{np.sqrt(max(lam, 0.0)):.6E}"
        lines.append(row)
        values.append(cs)
    (outdir / "infsup.csv").write_text("\n".join(lines) + "\n")
    _manifest(args, outdir, {"c_s": values}, t0)
    return EXIT_OK


def cmd_verify(args) -> int:
    outdir = args.out
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    mesh = make_mesh(args.n, args.mesh, seed=args.seed)
    results = verify.run_verification(mesh, order=args.order,
                                      gamma_sd=args.gamma_sd)
    report = []
    for res in results:
        print(res.line())
        report.append(vars(res))
    (outdir / "verify.json").write_text(json.dumps(report, indent=2) + "\n")
    _manifest(args, outdir, {"n_checks": len(results)}, t0)
    failed = any(r.status == verify.FAIL for r in results)
    return EXIT_CHECK if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"convergence": cmd_convergence,
                "penalty-sweep": cmd_penalty_sweep,
                "outflow": cmd_outflow,
                "infsup": cmd_infsup,
                "verify": cmd_verify}
    try:
        return handlers[args.command](args)
    except (assembly.AssemblyError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except linalg.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
