"""Stationary solvers for ``Fhat(p1, ..., p4, q1, q2, u, x) = 0`` with Dirichlet data.

The auxiliary variables are affine functions of ``u`` (identity mass
matrices), so the nonlinear system is reduced to the ``u`` block:

    R(u)_k = (Fhat(P1 u, ..., P4 u, Q1 u, Q2 u, u, .), phi_k)

and solved by damped Newton.  :func:`solve_splitting` is the fixed-point
iteration that alternates a pointwise solve for ``(p2 + p3) / 2`` with a
linear solve for ``u``.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import linalg
from .dgspace import DGFunction, DGSpace, l2_project
from .ldg_ops import FIELDS, LDGSystem
from .numop import NumericalOperator

logger = logging.getLogger(__name__)

MAX_HALVINGS = 10


class NonconvergenceError(RuntimeError):
    def __init__(self, message, state=None, log=None):
        super().__init__(message)
        self.state = state
        self.log = log or []


@dataclass
class SolverConfig:
    newton_tol: float = 1e-10
    max_newton_iters: int = 50
    splitting_tol: float = 1e-9
    max_splitting_iters: int = 100
    jacobian: str = "analytic"  # or "finite-difference"
    # splitting sweeps run before Newton when the Jacobian at the initial guess
    # is singular (e.g. F_p = 0 there); 0 disables the warm start
    warm_start_sweeps: int = 100

    def __post_init__(self):
        if self.newton_tol <= 0 or self.splitting_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.jacobian not in ("analytic", "finite-difference"):
            raise ValueError(f"unknown jacobian strategy {self.jacobian!r}")


@dataclass
class EllipticState:
    u: DGFunction
    q1: DGFunction
    q2: DGFunction
    p1: DGFunction
    p2: DGFunction
    p3: DGFunction
    p4: DGFunction
    log: list = field(default_factory=list)

    @property
    def s(self) -> DGFunction:
        """``(p2 + p3) / 2``."""
        return DGFunction(self.u.space, 0.5 * (self.p2.coeffs + self.p3.coeffs))


def state_from_u(sys: LDGSystem, u: DGFunction, u_a: float, u_b: float, log=None) -> EllipticState:
    fields = sys.field_vectors(u.vector, u_a, u_b)
    f = {name: sys.space.from_vector(v) for name, v in zip(FIELDS, fields)}
    f["u"] = u
    return EllipticState(log=list(log or []), **f)


def linear_interpolant(space: DGSpace, u_a: float, u_b: float) -> DGFunction:
    a, b = space.mesh.a, space.mesh.b
    return l2_project(space, lambda x: u_a + (u_b - u_a) * (x - a) / (b - a))


# ---------------------------------------------------------------------------
# quadrature-level maps, built once per assembled system

@dataclass(frozen=True)
class _QuadMaps:
    E: np.ndarray        # coefficient vector -> values at quadrature points
    P: np.ndarray        # values at quadrature points -> L2 projection coefficients
    EL: np.ndarray       # (7, Jnq, n) linear part of every field at quadrature points
    ELa: np.ndarray      # (7, Jnq) response to u_a
    ELb: np.ndarray
    x: np.ndarray        # flattened quadrature points


@functools.lru_cache(maxsize=64)
def _quad_maps(sys: LDGSystem) -> _QuadMaps:
    sp = sys.space
    n = sp.n_dof
    E = sp.eval_matrix()
    wh = (sp.weights[None, :] * sp.h[:, None] / 2.0).reshape(-1)
    P = E.T * wh[None, :]
    nf = len(FIELDS)
    EL = np.stack([E @ sys.L[i * n:(i + 1) * n] for i in range(nf)])
    ELa = (sys.La.reshape(nf, n) @ E.T)
    ELb = (sys.Lb.reshape(nf, n) @ E.T)
    return _QuadMaps(E, P, EL, ELa, ELb, sp.quad_points.reshape(-1))


def field_values(sys: LDGSystem, u_vec: np.ndarray, u_a: float, u_b: float) -> np.ndarray:
    """All seven fields at the quadrature points, shape ``(7, J*nq)``."""
    m = _quad_maps(sys)
    return m.EL @ u_vec + u_a * m.ELa + u_b * m.ELb


def residual(sys: LDGSystem, op: NumericalOperator, u: DGFunction, bc, t: float = 0.0) -> np.ndarray:
    """Coefficients of the L2 projection of ``Fhat`` evaluated on ``u``'s discrete derivatives.

    ``bc`` is ``(u_a, u_b)`` or a :class:`BoundaryData` evaluated at ``t``.
    """
    u_a, u_b = _bc_values(bc, t)
    uv = u.vector if isinstance(u, DGFunction) else np.asarray(u, dtype=float)
    return _residual_vec(sys, op, uv, u_a, u_b, t)


def _bc_values(bc, t):
    if hasattr(bc, "at"):
        return bc.at(t)
    u_a, u_b = bc
    return float(u_a), float(u_b)


def _residual_vec(sys, op, uv, u_a, u_b, t):
    m = _quad_maps(sys)
    vals = field_values(sys, uv, u_a, u_b)
    fhat = op(*vals, m.x, t)
    return m.P @ fhat


def jacobian(sys: LDGSystem, op: NumericalOperator, u, bc, t: float = 0.0,
             analytic: bool = True) -> np.ndarray:
    """``dR/du`` by the chain rule through the fixed derivative maps."""
    u_a, u_b = _bc_values(bc, t)
    uv = u.vector if isinstance(u, DGFunction) else np.asarray(u, dtype=float)
    m = _quad_maps(sys)
    vals = field_values(sys, uv, u_a, u_b)
    d = np.stack(op.partials(*vals, m.x, t, analytic=analytic))
    return m.P @ np.einsum("fq,fqn->qn", d, m.EL)


def fd_jacobian(fun: Callable, uv: np.ndarray, rel_step: float = 1e-7) -> np.ndarray:
    """Column-wise central-difference Jacobian of a vector function."""
    uv = np.asarray(uv, dtype=float)
    cols = []
    for k in range(uv.size):
        h = rel_step * (1.0 + abs(uv[k]))
        e = np.zeros_like(uv)
        e[k] = h
        cols.append((fun(uv + e) - fun(uv - e)) / (2.0 * h))
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# damped Newton

def newton(fun: Callable, jac: Callable, x0: np.ndarray, tol: float, max_iter: int):
    """Damped Newton on ``fun(x) = 0``; returns ``(x, log)``.

    The step is halved (at most ``MAX_HALVINGS`` times) until the max-norm of
    the residual decreases; if it never does the smallest step is taken.
    Raises :class:`NonconvergenceError` after ``max_iter`` iterations.
    """
    x = np.array(x0, dtype=float)
    R = fun(x)
    res = linalg.norm_inf(R)
    log = [{"iteration": 0, "residual": res, "step": 0.0}]
    for it in range(1, max_iter + 1):
        if res <= tol:
            return x, log
        try:
            dx = linalg.lu_solve(jac(x), -R)
        except linalg.SingularMatrixError as exc:
            raise NonconvergenceError(
                f"singular Jacobian at Newton iteration {it} ({exc}); "
                "a larger moment coefficient alpha usually restores solvability",
                state=x, log=log) from exc
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            x_new = x + lam * dx
            try:
                R_new = fun(x_new)
                res_new = linalg.norm_inf(R_new)
            except FloatingPointError:
                res_new = np.inf
            if res_new < res:
                break
            lam *= 0.5
        else:
            lam *= 2.0
            x_new = x + lam * dx
            R_new = fun(x_new)
            res_new = linalg.norm_inf(R_new)
        x, R, res = x_new, R_new, res_new
        log.append({"iteration": it, "residual": res, "step": lam * linalg.norm_inf(dx)})
        logger.debug("newton it=%d residual=%.3e damping=%g", it, res, lam)
    if res <= tol:
        return x, log
    raise NonconvergenceError(
        f"Newton did not reach residual {tol:.1e} in {max_iter} iterations "
        f"(last residual {res:.3e})", state=x, log=log)


def solve_newton(sys: LDGSystem, op: NumericalOperator, problem, config: SolverConfig = None,
                 initial_guess: Optional[DGFunction] = None, t: float = 0.0) -> EllipticState:
    """Reduced damped Newton for the stationary problem; the log is attached to the state."""
    config = config or SolverConfig()
    u_a, u_b = _bc_values(problem.bc, t)
    if initial_guess is None:
        initial_guess = linear_interpolant(sys.space, u_a, u_b)

    def fun(uv):
        return _residual_vec(sys, op, uv, u_a, u_b, t)

    if config.jacobian == "analytic":
        def jac(uv):
            return jacobian(sys, op, uv, (u_a, u_b), t)
    else:
        def jac(uv):
            return fd_jacobian(fun, uv)

    def warm_start(guess):
        logger.info("warm start: %d splitting sweeps before Newton", config.warm_start_sweeps)
        warm = solve_splitting(sys, op, problem,
                               replace(config, max_splitting_iters=config.warm_start_sweeps),
                               initial_guess=guess, t=t)
        return warm.u.vector, [dict(entry, phase="splitting") for entry in warm.log]

    u0, warm_log = initial_guess.vector, []
    use_warm = config.warm_start_sweeps > 0
    if use_warm and _is_singular(jac(u0)):
        u0, warm_log = warm_start(initial_guess)
        use_warm = False
    try:
        uv, log = newton(fun, jac, u0, config.newton_tol, config.max_newton_iters)
    except NonconvergenceError as exc:
        if not use_warm:
            _attach_state(exc, sys, u_a, u_b, warm_log)
            raise
        # Newton diverged from the plain guess: retry from a splitting warm start
        u0, warm_log = warm_start(initial_guess)
        try:
            uv, log = newton(fun, jac, u0, config.newton_tol, config.max_newton_iters)
        except NonconvergenceError as exc2:
            _attach_state(exc2, sys, u_a, u_b, warm_log)
            raise
    return state_from_u(sys, sys.space.from_vector(uv), u_a, u_b, warm_log + log)


def _attach_state(exc, sys, u_a, u_b, warm_log):
    if exc.state is not None and not isinstance(exc.state, EllipticState):
        exc.state = state_from_u(sys, sys.space.from_vector(exc.state), u_a, u_b, warm_log + exc.log)


def _is_singular(A: np.ndarray) -> bool:
    try:
        linalg.lu_factor(A)
    except linalg.SingularMatrixError:
        return True
    return False


# ---------------------------------------------------------------------------
# splitting iteration

class ScalarRootError(RuntimeError):
    pass


def _pointwise_root(g: Callable, dg: Callable, s0: np.ndarray, x: np.ndarray,
                    tol: float = 1e-13, max_iter: int = 30) -> np.ndarray:
    """Solve ``g(s) = 0`` independently at every point, starting from ``s0``.

    Vectorized Newton first; points where it fails fall back to a bracket grown
    geometrically around ``s0`` followed by Brent's method.
    """
    s = np.array(s0, dtype=float)
    done = np.zeros(s.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            gv = g(s, slice(None))
            done = np.abs(gv) <= tol * (1.0 + np.abs(s))
            if done.all():
                return s
            d = dg(s, slice(None))
            step = np.where(done, 0.0, gv / d)
            ok = np.isfinite(step)
            s = np.where(ok, s - step, s)
        gv = g(s, slice(None))
        done = np.isfinite(gv) & (np.abs(gv) <= 1e3 * tol * (1.0 + np.abs(s)))
    for i in np.flatnonzero(~done):
        s[i] = _bracketed_root(lambda v: float(g(np.array([v]), [i])[0]), float(s0[i]), x[i])
    return s


def _bracketed_root(gi: Callable, s0: float, where: float) -> float:
    g0 = gi(s0)
    if g0 == 0.0:
        return s0
    width = 1e-2 * (1.0 + abs(s0))
    for _ in range(80):
        for lo, hi in ((s0, s0 + width), (s0 - width, s0)):
            glo, ghi = gi(lo), gi(hi)
            if np.isfinite(glo) and np.isfinite(ghi) and glo * ghi <= 0.0:
                return brentq(gi, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        width *= 2.0
    raise ScalarRootError(f"no root of the pointwise equation for (p2+p3)/2 near x={where:.6g} "
                          f"(started from {s0:.6g})")


def solve_splitting(sys: LDGSystem, op: NumericalOperator, problem, config: SolverConfig = None,
                    initial_guess: Optional[DGFunction] = None, t: float = 0.0) -> EllipticState:
    """Alternate a pointwise solve for ``s = (p2 + p3)/2`` with a linear solve for ``u``.

    Each sweep: with ``p1, p4, q1, q2, u`` frozen, solve
    ``F(s, (q1+q2)/2, u, x) + alpha (p1 - 2 s + p4) = 0`` at every quadrature
    point and project ``s``; then find ``u`` (and ``q1, q2``) from the two
    q-equations and the average of the p2/p3-equations with ``s`` as data;
    finally refresh ``p1..p4``.  Stops when the max change of the projected
    ``s`` is below ``splitting_tol`` or after ``max_splitting_iters`` sweeps.
    """
    config = config or SolverConfig()
    sp = sys.space
    u_a, u_b = _bc_values(problem.bc, t)
    if initial_guess is None:
        initial_guess = linear_interpolant(sp, u_a, u_b)
    m = _quad_maps(sys)
    n = sp.n_dof
    Bavg = 0.5 * (sys.B2 + sys.B3)
    K = Bavg @ np.vstack([sys.A1, sys.A2])
    rhs0 = Bavg @ np.concatenate([sys.f1(u_a, u_b), sys.f2(u_a, u_b)])
    K_lu = linalg.lu_factor(K)
    alpha = float(op.alpha)
    F = op.base

    uv = initial_guess.vector.copy()
    s_prev = None
    log = []
    for it in range(1, config.max_splitting_iters + 1):
        p1, p2, p3, p4, q1, q2, u = field_values(sys, uv, u_a, u_b)
        qbar = 0.5 * (q1 + q2)
        moment = p1 + p4
        x = m.x

        def g(s, idx):
            return F(s, qbar[idx], u[idx], x[idx], t) + alpha * (moment[idx] - 2.0 * s)

        def dg(s, idx):
            return F.partials(s, qbar[idx], u[idx], x[idx], t)[0] - 2.0 * alpha

        s_quad = _pointwise_root(g, dg, 0.5 * (p2 + p3), x)
        s_coef = m.P @ s_quad
        uv = linalg.lu_solve_factored(K_lu, s_coef + rhs0)
        change = np.inf if s_prev is None else linalg.norm_inf(s_coef - s_prev)
        s_prev = s_coef
        log.append({"iteration": it, "s_change": change})
        if change <= config.splitting_tol:
            break
    return state_from_u(sys, sp.from_vector(uv), u_a, u_b, log)
