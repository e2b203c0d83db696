"""Convergence studies and the viscosity-selection experiment, with table/CSV/figure output."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dgspace import DGFunction, DGSpace, error_norms, l2_project, reference_basis
from .elliptic import NonconvergenceError, ScalarRootError, SolverConfig, solve_newton, solve_splitting
from .ldg_ops import assemble
from .mesh import uniform_mesh
from .numop import NumericalOperator, OperatorEvaluationError
from .parabolic import BlowUpError, TimeGrid, evolve
from .problems import get_problem, selection_fixtures

logger = logging.getLogger(__name__)

SOLVERS = ("newton", "splitting")
SCHEMES = ("stationary", "rk4", "feuler", "trapezoidal")
STUDY_COLUMNS = ("J", "h", "l2", "l2_order", "linf", "linf_order")
SOLVER_FAILURES = (NonconvergenceError, ScalarRootError, OperatorEvaluationError,
                   BlowUpError, np.linalg.LinAlgError)


@dataclass
class RunConfig:
    problem: str
    r: Sequence[int] = (1,)
    J: Sequence[int] = (4, 8, 16, 32)
    alpha: Optional[float] = None          # None: the problem's default
    solver: str = "newton"
    scheme: Optional[str] = None           # None: stationary or rk4 by problem kind
    dt: Optional[float] = None
    kappa_t: Optional[float] = None        # None with dt None: problem defaults
    T: Optional[float] = None
    newton_tol: float = 1e-10
    splitting_tol: float = 1e-9
    max_newton_iters: int = 50
    max_splitting_iters: int = 100
    projection: str = "modified"
    quad_order: Optional[int] = None
    out: Optional[str] = None               # table path; CSV and figures go next to it
    seed: int = 0

    def __post_init__(self):
        self.r = [int(v) for v in np.atleast_1d(self.r)]
        self.J = [int(v) for v in np.atleast_1d(self.J)]
        if any(j2 <= j1 for j1, j2 in zip(self.J, self.J[1:])):
            raise ValueError(f"J list must be strictly increasing, got {self.J}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if self.scheme is not None and self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.scheme in ("rk4", "feuler") and self.dt is not None and self.kappa_t is not None:
            raise ValueError("give exactly one of dt and kappa_t for explicit schemes")

    @property
    def problem_obj(self):
        return get_problem(self.problem)

    def resolved_scheme(self, problem=None) -> str:
        problem = problem or self.problem_obj
        if self.scheme is not None:
            if (self.scheme == "stationary") != (problem.kind == "elliptic"):
                raise ValueError(f"scheme {self.scheme} does not apply to {problem.kind} problem {problem.name}")
            return self.scheme
        return "stationary" if problem.kind == "elliptic" else "rk4"

    def solver_config(self) -> SolverConfig:
        return SolverConfig(newton_tol=self.newton_tol, max_newton_iters=self.max_newton_iters,
                            splitting_tol=self.splitting_tol,
                            max_splitting_iters=self.max_splitting_iters)

    def time_grid(self, problem, r: int, h_max: float) -> TimeGrid:
        T = self.T if self.T is not None else problem.defaults["T"]
        scheme = self.resolved_scheme(problem)
        if self.dt is not None:
            return TimeGrid.from_dt(T, self.dt)
        if self.kappa_t is not None:
            return TimeGrid.from_cfl(T, self.kappa_t, h_max)
        if scheme == "trapezoidal":
            return TimeGrid.from_dt(T, problem.defaults["dt"])
        return TimeGrid.from_cfl(T, problem.defaults["kappa_t"][r], h_max)


def order(e_coarse: float, e_fine: float, h_coarse: float, h_fine: float) -> float:
    """Observed rate ``log(e_coarse/e_fine) / log(h_coarse/h_fine)`` (log2 ratio when h halves)."""
    if not (e_coarse > 0 and e_fine > 0) or not (np.isfinite(e_coarse) and np.isfinite(e_fine)):
        return math.nan
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


@dataclass
class StudyRow:
    r: int
    J: int
    h: float
    l2: float = math.nan
    linf: float = math.nan
    l2_order: float = math.nan
    linf_order: float = math.nan
    status: str = "ok"
    iterations: int = 0


@dataclass
class StudyReport:
    config: RunConfig
    rows: list = field(default_factory=list)
    solutions: dict = field(default_factory=dict)   # (r, J) -> DGFunction
    files: list = field(default_factory=list)

    def for_r(self, r: int) -> list:
        return [row for row in self.rows if row.r == r]

    def get(self, r: int, J: int) -> StudyRow:
        for row in self.rows:
            if row.r == r and row.J == J:
                return row
        raise KeyError((r, J))

    def markdown(self) -> str:
        return format_markdown(self)


def solve_case(problem, r: int, J: int, op: NumericalOperator, config: RunConfig):
    """One (r, J) cell: returns ``(u_h, t_final, iterations)``."""
    space = DGSpace(uniform_mesh(problem.a, problem.b, J), r, config.quad_order)
    sys = assemble(space)
    scheme = config.resolved_scheme(problem)
    if scheme == "stationary":
        solve = solve_newton if config.solver == "newton" else solve_splitting
        state = solve(sys, op, problem, config.solver_config())
        return state.u, 0.0, len(state.log)
    grid = config.time_grid(problem, r, space.mesh.h_max)
    res = evolve(scheme, problem, space, grid, op, config.solver_config(), sys=sys,
                 projection=config.projection)
    return res.u, grid.T, grid.n_steps


def run_convergence_study(config: RunConfig, write: bool = True) -> StudyReport:
    """Errors and observed orders for every ``(r, J)``; failures are recorded and the sweep continues."""
    problem = config.problem_obj
    alpha = problem.alpha_default if config.alpha is None else config.alpha
    op = NumericalOperator(problem.F, alpha)
    report = StudyReport(config)
    for r in config.r:
        prev = None
        for J in config.J:
            row = StudyRow(r, J, (problem.b - problem.a) / J)
            try:
                u, t_final, its = solve_case(problem, r, J, op, config)
                err = error_norms(u, problem.exact_at(t_final))
                row.l2, row.linf, row.iterations = err["l2"], err["linf"], its
                report.solutions[(r, J)] = u
            except SOLVER_FAILURES as exc:
                row.status = f"failed: {exc}"
                logger.warning("%s r=%d J=%d failed: %s", problem.name, r, J, exc)
            if prev is not None:
                row.l2_order = order(prev.l2, row.l2, prev.h, row.h)
                row.linf_order = order(prev.linf, row.linf, prev.h, row.h)
            report.rows.append(row)
            prev = row
            logger.info("%s r=%d J=%d l2=%.3e linf=%.3e", problem.name, r, J, row.l2, row.linf)
    if write and config.out:
        write_study_outputs(report, config.out)
    return report


# ---------------------------------------------------------------------------
# output

def sci2(v: float) -> str:
    """Two significant digits in scientific notation (``3.9e-04``); ``nan`` passes through."""
    return "nan" if not np.isfinite(v) else f"{v:.1e}"


def _num(v: float) -> str:
    return "nan" if not np.isfinite(v) else repr(float(v))


def format_markdown(report: StudyReport) -> str:
    cfg = report.config
    Js = cfg.J
    problem = cfg.problem_obj
    hs = [(problem.b - problem.a) / J for J in Js]
    head = ["r", "Norm", f"h = {hs[0]:.4g}"]
    for h in hs[1:]:
        head += [f"h = {h:.4g}", "Order"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    failures = []
    for r in cfg.r:
        rows = {row.J: row for row in report.for_r(r)}
        for norm in ("l2", "linf"):
            cells = [str(r) if norm == "l2" else "", "L2" if norm == "l2" else "Linf"]
            for k, J in enumerate(Js):
                row = rows[J]
                cells.append("fail" if row.status != "ok" else sci2(getattr(row, norm)))
                if k:
                    o = getattr(row, f"{norm}_order")
                    cells.append("" if not np.isfinite(o) else f"{o:.2f}")
            lines.append("| " + " | ".join(cells) + " |")
        failures += [f"- r={row.r}, J={row.J}: {row.status}" for row in rows.values() if row.status != "ok"]
    if failures:
        lines += ["", "Failures:"] + failures
    return "\n".join(lines) + "\n"


def write_study_csv(report: StudyReport, path, r: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STUDY_COLUMNS)
        for row in report.for_r(r):
            w.writerow([row.J, _num(row.h), _num(row.l2), _num(row.l2_order),
                        _num(row.linf), _num(row.linf_order)])


def write_study_outputs(report: StudyReport, out) -> list:
    """``out`` (Markdown) plus ``<stem>_r<r>.csv`` and ``<stem>_r<r>.png`` beside it."""
    from .plotting import plot_convergence

    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.markdown())
    files = [out]
    for r in report.config.r:
        csv_path = out.with_name(f"{out.stem}_r{r}.csv")
        write_study_csv(report, csv_path, r)
        files.append(csv_path)
    png = out.with_suffix(".png")
    plot_convergence(report, png)
    files.append(png)
    report.files = files
    return files


def write_solution_csv(u: DGFunction, exact, path) -> None:
    """Columns ``x_sample, u_h, exact, error`` on a fixed per-cell sampling (cells left to right)."""
    x, uh = sample_solution(u)
    ex = exact(x) if exact is not None else np.full_like(x, np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_sample", "u_h", "exact", "error"])
        for xi, ui, ei in zip(x, uh, ex):
            w.writerow([_num(xi), _num(ui), _num(ei), _num(ui - ei)])


def sample_solution(u: DGFunction, per_cell: int = 11):
    """Values of ``u`` at ``per_cell`` uniform points of every cell, including both endpoints."""
    sp = u.space
    xi = np.linspace(-1.0, 1.0, per_cell)
    x = sp.mesh.centers[:, None] + 0.5 * sp.h[:, None] * xi[None, :]
    vals = (u.coeffs * sp.value_scale[:, None]) @ reference_basis(sp.r, xi).T
    return x.ravel(), vals.ravel()


# ---------------------------------------------------------------------------
# viscosity selection

OUTCOMES = ("u_plus", "u_minus", "mu")


@dataclass
class SelectionResult:
    converged_to: str
    final: Optional[DGFunction]
    distances: dict
    diagnostics: str = ""


def classify(u: DGFunction, fixtures: dict, tol: float, ratio: float = 10.0):
    """Nearest fixture in L2 if within ``tol`` and at least ``ratio`` times closer than the rest."""
    dist = {name: error_norms(u, f)["l2"] for name, f in fixtures.items()}
    ranked = sorted(dist, key=dist.get)
    best, second = ranked[0], ranked[1]
    if dist[best] <= tol and dist[second] >= ratio * dist[best]:
        return best, dist
    return "other", dist


def run_selection_experiment(alpha: float, r: int, J: int, splitting_iters: int = 100,
                             config: Optional[SolverConfig] = None) -> SelectionResult:
    """Monge-Ampere problem from ``(3/4) mu + (1/4) u_bar``: splitting sweeps, then Newton.

    The result is classified against ``u_plus``, ``u_minus`` and ``mu`` with the
    threshold ``10 h^{r+1}``.
    """
    problem = get_problem("test1")
    fx = selection_fixtures()
    space = DGSpace(uniform_mesh(problem.a, problem.b, J), r)
    sys = assemble(space)
    op = NumericalOperator(problem.F, alpha)
    base = config or SolverConfig()
    cfg = SolverConfig(newton_tol=base.newton_tol, max_newton_iters=base.max_newton_iters,
                       splitting_tol=np.finfo(float).tiny, max_splitting_iters=splitting_iters,
                       jacobian=base.jacobian, warm_start_sweeps=0)
    guess = l2_project(space, lambda x: 0.75 * fx["mu"](x) + 0.25 * fx["u_bar"](x))
    outcomes = {name: fx[name] for name in OUTCOMES}
    tol = 10.0 * space.mesh.h_max ** (r + 1)
    try:
        pre = solve_splitting(sys, op, problem, cfg, initial_guess=guess)
        state = solve_newton(sys, op, problem, cfg, initial_guess=pre.u)
    except SOLVER_FAILURES as exc:
        final = getattr(getattr(exc, "state", None), "u", None)
        dist = classify(final, outcomes, tol)[1] if final is not None else {}
        return SelectionResult("other", final, dist, f"solver failure: {exc}")
    label, dist = classify(state.u, outcomes, tol)
    return SelectionResult(label, state.u, dist,
                           f"threshold {tol:.2e}; Newton iterations {len(state.log) - 1}")
