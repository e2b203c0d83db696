"""Time stepping for ``u_t + F(u_xx, u_x, u, x, t) = 0`` with Dirichlet data.

Explicit schemes (RK4, forward Euler) update the L2-projected numerical
operator and enforce the boundary data weakly through a penalized projection
at the end of every step.  The trapezoidal scheme solves one reduced nonlinear
system per step with the elliptic Newton machinery.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import linalg
from .boundary import BoundaryData
from .dgspace import DGFunction, DGSpace, l2_project
from .elliptic import (EllipticState, NonconvergenceError, SolverConfig, _quad_maps,
                       jacobian, newton, residual, state_from_u)
from .ldg_ops import LDGSystem
from .numop import NumericalOperator, OperatorEvaluationError

logger = logging.getLogger(__name__)

SCHEMES = ("rk4", "feuler", "trapezoidal")


class BlowUpError(FloatingPointError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time levels ``t_k = k dt`` with ``dt * n_steps = T``."""
    T: float
    n_steps: int
    cfl_kappa: Optional[float] = None

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("final time must be nonnegative")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0 or (self.n_steps == 0 and self.T > 0):
            raise ValueError(f"invalid number of steps {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps if self.n_steps else 0.0

    def time(self, k: int) -> float:
        return k * self.dt

    @classmethod
    def from_dt(cls, T: float, dt: float) -> "TimeGrid":
        """Largest uniform step not exceeding ``dt`` that lands on ``T``."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        n = max(1, math.ceil(T / dt - 1e-9)) if T > 0 else 0
        return cls(T, n)

    @classmethod
    def from_cfl(cls, T: float, kappa_t: float, h_max: float) -> "TimeGrid":
        """``dt = kappa_t h_max^2``, rounded down so that an integer number of steps reaches ``T``."""
        if kappa_t <= 0:
            raise ValueError("kappa_t must be positive")
        grid = cls.from_dt(T, kappa_t * h_max ** 2)
        return cls(grid.T, grid.n_steps, kappa_t)


# ---------------------------------------------------------------------------
# spatial operators

def fhat_apply(sys: LDGSystem, op: NumericalOperator, v: DGFunction, t: float,
               bc: BoundaryData) -> DGFunction:
    """L2 projection of the numerical operator applied to ``v`` with boundary data at ``t``."""
    return sys.space.from_vector(residual(sys, op, v, bc, t))


@functools.lru_cache(maxsize=64)
def _penalty_solver(space: DGSpace, penalty: float):
    """Inverse of ``I + penalty (e_a e_a^T + e_b e_b^T)`` by the Woodbury identity."""
    ea = space.trace_vector(0, "+")
    eb = space.trace_vector(space.J, "-")
    U = np.column_stack([ea, eb])
    small = np.eye(2) / penalty + U.T @ U if penalty > 0 else None
    return ea, eb, U, small


def modified_projection(space: DGSpace, v, t: float, bc: BoundaryData,
                        penalty: Optional[float] = None) -> DGFunction:
    """Projection with the boundary data imposed by a penalty at ``a+`` and ``b-``.

    Solves ``(Pv, phi) + w [Pv(a+) phi(a+) + Pv(b-) phi(b-)]
    = (v, phi) + w [u_a(t) phi(a+) + u_b(t) phi(b-)]`` with ``w = h_max^{-1/2}``
    unless ``penalty`` is given.  ``penalty=0`` is the standard projection.
    """
    if penalty is None:
        penalty = space.mesh.h_max ** -0.5
    coeffs = v.vector if isinstance(v, DGFunction) else l2_project(space, v).vector
    u_a, u_b = bc.at(t)
    return space.from_vector(_penalized(space, coeffs, u_a, u_b, float(penalty)))


def _penalized(space, coeffs, u_a, u_b, penalty):
    if penalty == 0.0:
        return np.array(coeffs, dtype=float)
    ea, eb, U, small = _penalty_solver(space, penalty)
    rhs = coeffs + penalty * (u_a * ea + u_b * eb)
    return rhs - U @ np.linalg.solve(small, U.T @ rhs)


class _ExplicitRHS:
    """``v -> -P_h Fhat_t[v]`` on coefficient vectors, with every linear map fused."""

    def __init__(self, sys: LDGSystem, op: NumericalOperator, bc: BoundaryData):
        m = _quad_maps(sys)
        nf, nq, n = m.EL.shape
        self.M = m.EL.reshape(nf * nq, n)
        self.Ma, self.Mb = m.ELa.reshape(-1), m.ELb.reshape(-1)
        self.P, self.x, self.nf, self.nq = m.P, m.x, nf, nq
        self.op, self.bc = op, bc

    def __call__(self, v: np.ndarray, t: float, stage: str = "") -> np.ndarray:
        u_a, u_b = self.bc.at(t)
        vals = (self.M @ v + u_a * self.Ma + u_b * self.Mb).reshape(self.nf, self.nq)
        try:
            fhat = self.op(*vals, self.x, t)
        except OperatorEvaluationError as exc:
            raise BlowUpError(f"non-finite operator in {stage or 'stage'} at t={t:.6g}: {exc}; "
                              "try a smaller kappa_t") from exc
        return -(self.P @ fhat)


def _finite(vec, stage, t):
    if not np.all(np.isfinite(vec)):
        raise BlowUpError(f"non-finite values after {stage} at t={t:.6g}; try a smaller kappa_t")
    return vec


@functools.lru_cache(maxsize=64)
def _rhs_for(sys, op, bc):
    return _ExplicitRHS(sys, op, bc)


def _rk4_vec(rhs, v, t0, dt, space, bc, penalty):
    th = t0 + 0.5 * dt
    k1 = dt * rhs(v, t0, "stage 1")
    k2 = dt * rhs(v + 0.5 * k1, th, "stage 2")
    k3 = dt * rhs(v + 0.5 * k2, th, "stage 3")
    k4 = dt * rhs(v + k3, t0 + dt, "stage 4")
    w = v + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    u_a, u_b = bc.at(t0 + dt)
    return _finite(_penalized(space, w, u_a, u_b, penalty), "RK4 step", t0 + dt)


def _feuler_vec(rhs, v, t0, dt, space, bc, penalty):
    w = v + dt * rhs(v, t0, "forward Euler")
    u_a, u_b = bc.at(t0 + dt)
    return _finite(_penalized(space, w, u_a, u_b, penalty), "forward Euler step", t0 + dt)


def _penalty_for(space, projection):
    if projection == "modified":
        return space.mesh.h_max ** -0.5
    if projection == "standard":
        return 0.0
    raise ValueError(f"unknown projection mode {projection!r}")


def step_rk4(sys: LDGSystem, op: NumericalOperator, u_prev: DGFunction, t_prev: float,
             dt: float, bc: BoundaryData, projection: str = "modified") -> DGFunction:
    """Classical four-stage Runge-Kutta step; half stages use boundary data at ``t + dt/2``."""
    sp = sys.space
    v = _rk4_vec(_rhs_for(sys, op, bc), u_prev.vector, t_prev, dt, sp, bc, _penalty_for(sp, projection))
    return sp.from_vector(v)


def step_forward_euler(sys: LDGSystem, op: NumericalOperator, u_prev: DGFunction, t_prev: float,
                       dt: float, bc: BoundaryData, projection: str = "modified") -> DGFunction:
    sp = sys.space
    v = _feuler_vec(_rhs_for(sys, op, bc), u_prev.vector, t_prev, dt, sp, bc, _penalty_for(sp, projection))
    return sp.from_vector(v)


def step_trapezoidal(sys: LDGSystem, op: NumericalOperator, u_prev: DGFunction,
                     state_prev: Optional[EllipticState], t_n: float, dt: float,
                     bc: BoundaryData, config: SolverConfig = None,
                     step_index: Optional[int] = None) -> EllipticState:
    """Solve ``u + dt/2 P_h Fhat_n[u] = u_prev - dt/2 P_h Fhat_{n-1}[u_prev]`` by damped Newton."""
    config = config or SolverConfig()
    t_prev = t_n - dt
    rhs = u_prev.vector - 0.5 * dt * residual(sys, op, u_prev, bc, t_prev)

    def fun(uv):
        return uv + 0.5 * dt * residual(sys, op, uv, bc, t_n) - rhs

    n = sys.space.n_dof

    def jac(uv):
        return np.eye(n) + 0.5 * dt * jacobian(sys, op, uv, bc, t_n,
                                                analytic=config.jacobian == "analytic")

    try:
        uv, log = newton(fun, jac, u_prev.vector, config.newton_tol, config.max_newton_iters)
    except NonconvergenceError as exc:
        where = f" at time step {step_index}" if step_index is not None else ""
        raise NonconvergenceError(f"trapezoidal Newton failed{where} (t={t_n:.6g}): {exc}",
                                  state=exc.state, log=exc.log) from exc
    u_a, u_b = bc.at(t_n)
    return state_from_u(sys, sys.space.from_vector(uv), u_a, u_b, log)


@dataclass
class EvolutionResult:
    u: DGFunction
    grid: TimeGrid
    history: list = field(default_factory=list)   # (t, DGFunction) snapshots

    @property
    def t(self) -> float:
        return self.grid.T


def evolve(scheme: str, problem, space: DGSpace, grid: TimeGrid, op: NumericalOperator,
           config: SolverConfig = None, sys: Optional[LDGSystem] = None,
           projection: str = "modified", snapshot_every: int = 0,
           callback: Optional[Callable] = None) -> EvolutionResult:
    """March ``P_h u_0`` to ``T`` with the chosen scheme.

    ``snapshot_every = k > 0`` stores the solution every ``k`` steps and at ``T``.
    """
    from .ldg_ops import assemble

    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if problem.u0 is None:
        raise ValueError(f"problem {problem.name} has no initial data")
    sys = sys or assemble(space)
    bc = problem.bc
    u = l2_project(space, problem.u0)
    history = [(0.0, u.copy())] if snapshot_every else []
    dt = grid.dt

    if scheme == "trapezoidal":
        state = state_from_u(sys, u, *bc.at(0.0))
        for k in range(1, grid.n_steps + 1):
            state = step_trapezoidal(sys, op, state.u, state, grid.time(k), dt, bc, config, step_index=k)
            u = state.u
            if snapshot_every and (k % snapshot_every == 0 or k == grid.n_steps):
                history.append((grid.time(k), u.copy()))
            if callback:
                callback(k, grid.time(k), u)
        return EvolutionResult(u, grid, history)

    stepper = _rk4_vec if scheme == "rk4" else _feuler_vec
    rhs = _rhs_for(sys, op, bc)
    penalty = _penalty_for(space, projection)
    v = u.vector
    for k in range(1, grid.n_steps + 1):
        v = stepper(rhs, v, grid.time(k - 1), dt, space, bc, penalty)
        if snapshot_every and (k % snapshot_every == 0 or k == grid.n_steps):
            history.append((grid.time(k), space.from_vector(v)))
        if callback:
            callback(k, grid.time(k), space.from_vector(v))
    return EvolutionResult(space.from_vector(v), grid, history)
