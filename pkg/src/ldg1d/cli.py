"""LDG solvers for 1D fully nonlinear equations: single solves, convergence studies,
the viscosity-selection experiment and time evolution.

    ldg1d solve  --problem test3 --r 2 --J 64 --alpha 4 --out sol.csv
    ldg1d study  --problem test1 --r 0,1,2 --J 4,8,16,32 --alpha 10 --out table.md
    ldg1d select --alpha 40 --r 0 --J 40
    ldg1d evolve --problem test7 --scheme rk4 --r 3 --J 16 --kappa-t 0.0005 --T 3.10

Every subcommand accepts ``--config FILE`` with flat ``key = value`` lines
(keys are the long option names, dashes or underscores); flags given on the
command line override the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .dgspace import DGSpace, error_norms, write_coefficients_csv
from .elliptic import SolverConfig, solve_newton, solve_splitting
from .ldg_ops import assemble
from .mesh import uniform_mesh
from .numop import NumericalOperator
from .parabolic import TimeGrid, evolve
from .problems import REGISTRY, get_problem
from .study import (SOLVER_FAILURES, RunConfig, run_convergence_study, run_selection_experiment,
                    sci2, write_solution_csv)

logger = logging.getLogger("ldg1d")


def int_list(text: str) -> list:
    return [int(v) for v in str(text).replace(" ", "").split(",") if v]


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--alpha", type=float, help="numerical moment coefficient (default: problem's)")
    p.add_argument("--newton-tol", type=float, default=1e-10)
    p.add_argument("--splitting-tol", type=float, default=1e-9)
    p.add_argument("--max-newton-iters", type=int, default=50)
    p.add_argument("--max-splitting-iters", type=int, default=100)
    p.add_argument("--quad-order", type=int, help="Gauss points per cell")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _time_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", choices=["stationary", "rk4", "feuler", "trapezoidal"])
    g = p.add_mutually_exclusive_group()
    g.add_argument("--dt", type=float)
    g.add_argument("--kappa-t", type=float, help="dt = kappa_t h^2")
    p.add_argument("--T", type=float, help="final time")
    p.add_argument("--projection", choices=["modified", "standard"], default="modified",
                   help="end-of-step projection for explicit schemes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldg1d", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    problems = sorted(REGISTRY)

    p = sub.add_parser("solve", help="one stationary solve")
    p.add_argument("--problem", choices=problems)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--J", type=int, default=16)
    p.add_argument("--solver", choices=["newton", "splitting"], default="newton")
    p.add_argument("--out", help="solution CSV (x_sample,u_h,exact,error); PNG written beside it")
    p.add_argument("--coefficients", help="also dump DG coefficients to this CSV")
    _common(p)

    p = sub.add_parser("study", help="convergence table over r and J")
    p.add_argument("--problem", choices=problems)
    p.add_argument("--r", type=int_list, default=[1])
    p.add_argument("--J", type=int_list, default=[4, 8, 16, 32])
    p.add_argument("--solver", choices=["newton", "splitting"], default="newton")
    p.add_argument("--out", help="Markdown table; per-degree CSV and a PNG are written beside it")
    _time_opts(p)
    _common(p)

    p = sub.add_parser("select", help="viscosity-selection experiment on the Monge-Ampere test")
    p.add_argument("--r", type=int, default=0)
    p.add_argument("--J", type=int, default=40)
    p.add_argument("--splitting-iters", type=int, default=100)
    p.add_argument("--out", help="solution CSV; PNG written beside it")
    _common(p)

    p = sub.add_parser("evolve", help="time-dependent solve")
    p.add_argument("--problem", choices=problems)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--J", type=int, default=16)
    p.add_argument("--snapshots", type=int, default=0, help="store every N-th step (0: none)")
    p.add_argument("--out", help="solution CSV at T; PNG written beside it")
    _time_opts(p)
    _common(p)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    config_path = pre.parse_known_args(argv)[0].config
    if config_path and argv and argv[0] in COMMANDS:
        sub = parser._subparsers._group_actions[0].choices[argv[0]]
        known = {a.dest: a for a in sub._actions}
        overrides = {}
        for key, value in read_config(config_path).items():
            if key not in known or key in ("help", "config"):
                parser.error(f"unknown config key {key!r} for {argv[0]}")
            action = known[key]
            try:
                overrides[key] = action.type(value) if action.type else value
            except ValueError:
                parser.error(f"config {key}={value!r}: invalid value")
            if action.choices and overrides[key] not in action.choices:
                parser.error(f"config {key}={value!r} not in {sorted(action.choices)}")
        sub.set_defaults(**overrides)
    args = parser.parse_args(argv)
    if args.command != "select" and args.problem is None:
        parser.error(f"{args.command}: --problem is required (flag or config key)")
    return args


def _solver_config(args) -> SolverConfig:
    return SolverConfig(newton_tol=args.newton_tol, max_newton_iters=args.max_newton_iters,
                        splitting_tol=args.splitting_tol, max_splitting_iters=args.max_splitting_iters)


def _write_solution(u, exact, out, title):
    from .plotting import plot_solution
    from .study import sample_solution

    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_solution_csv(u, exact, out)
    x, uh = sample_solution(u)
    plot_solution(x, uh, exact, out.with_suffix(".png"), title)
    print(f"wrote {out} and {out.with_suffix('.png')}")


def cmd_solve(args) -> int:
    problem = get_problem(args.problem)
    if problem.kind != "elliptic":
        print(f"{problem.name} is an evolution problem; use 'evolve'", file=sys.stderr)
        return 2
    alpha = problem.alpha_default if args.alpha is None else args.alpha
    space = DGSpace(uniform_mesh(problem.a, problem.b, args.J), args.r, args.quad_order)
    sys_ = assemble(space)
    solve = solve_newton if args.solver == "newton" else solve_splitting
    state = solve(sys_, NumericalOperator(problem.F, alpha), problem, _solver_config(args))
    for rec in state.log:
        logger.info("%s", rec)
    err = error_norms(state.u, problem.exact_at(0.0))
    print(f"{problem.name} r={args.r} J={args.J} alpha={alpha:g} {args.solver}: "
          f"L2 {sci2(err['l2'])}  Linf {sci2(err['linf'])}  iterations {len(state.log) - 1}")
    if args.out:
        _write_solution(state.u, problem.exact_at(0.0), args.out, f"{problem.name}, r={args.r}, J={args.J}")
    if args.coefficients:
        write_coefficients_csv(state.u, args.coefficients)
    return 0


def cmd_study(args) -> int:
    cfg = RunConfig(problem=args.problem, r=args.r, J=args.J, alpha=args.alpha, solver=args.solver,
                    scheme=args.scheme, dt=args.dt, kappa_t=args.kappa_t, T=args.T,
                    newton_tol=args.newton_tol, splitting_tol=args.splitting_tol,
                    max_newton_iters=args.max_newton_iters,
                    max_splitting_iters=args.max_splitting_iters, projection=args.projection,
                    quad_order=args.quad_order, out=args.out)
    report = run_convergence_study(cfg)
    print(report.markdown(), end="")
    for path in report.files:
        print(f"wrote {path}")
    return 0 if all(row.status == "ok" for row in report.rows) else 1


def cmd_select(args) -> int:
    alpha = 40.0 if args.alpha is None else args.alpha
    res = run_selection_experiment(alpha, args.r, args.J, args.splitting_iters, _solver_config(args))
    dist = ", ".join(f"{k} {sci2(v)}" for k, v in res.distances.items())
    print(f"alpha={alpha:g} r={args.r} J={args.J}: converged to {res.converged_to} "
          f"(L2 distances: {dist}; {res.diagnostics})")
    if args.out and res.final is not None:
        from .problems import selection_fixtures

        exact = selection_fixtures().get(res.converged_to)
        _write_solution(res.final, exact, args.out, f"alpha={alpha:g}, r={args.r}, J={args.J}")
    return 0


def cmd_evolve(args) -> int:
    problem = get_problem(args.problem)
    if problem.kind != "parabolic":
        print(f"{problem.name} is stationary; use 'solve'", file=sys.stderr)
        return 2
    cfg = RunConfig(problem=args.problem, r=[args.r], J=[args.J], scheme=args.scheme or "rk4",
                    dt=args.dt, kappa_t=args.kappa_t, T=args.T, projection=args.projection)
    alpha = problem.alpha_default if args.alpha is None else args.alpha
    space = DGSpace(uniform_mesh(problem.a, problem.b, args.J), args.r, args.quad_order)
    grid = cfg.time_grid(problem, args.r, space.mesh.h_max)
    scheme = cfg.resolved_scheme(problem)
    logger.info("%s: %d steps of dt=%.4g", scheme, grid.n_steps, grid.dt)
    res = evolve(scheme, problem, space, grid, NumericalOperator(problem.F, alpha), _solver_config(args),
                 projection=args.projection, snapshot_every=args.snapshots)
    err = error_norms(res.u, problem.exact_at(grid.T))
    print(f"{problem.name} {scheme} r={args.r} J={args.J} T={grid.T:g} steps={grid.n_steps} "
          f"dt={grid.dt:.4g}: L2 {sci2(err['l2'])}  Linf {sci2(err['linf'])}")
    if args.out:
        _write_solution(res.u, problem.exact_at(grid.T), args.out,
                        f"{problem.name}, {scheme}, r={args.r}, J={args.J}, T={grid.T:g}")
        if res.history:
            from .plotting import plot_snapshots

            snap = Path(args.out).with_name(Path(args.out).stem + "_snapshots.png")
            plot_snapshots(res.history, snap, problem.name)
            print(f"wrote {snap}")
    return 0


COMMANDS = {"solve": cmd_solve, "study": cmd_study, "select": cmd_select, "evolve": cmd_evolve}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except SOLVER_FAILURES as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
