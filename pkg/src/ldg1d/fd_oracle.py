"""Cell-centred finite difference scheme used to cross-check the piecewise-constant LDG solver.

The stencils are written out directly on midpoint values with mirror ghost
values ``U_{-1} = 2 u_a - U_1`` and ``U_{J+2} = 2 u_b - U_J``; nothing here
touches the DG assembly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .elliptic import NonconvergenceError, SolverConfig, _pointwise_root, fd_jacobian, newton
from .numop import NumericalOperator


@dataclass
class FDGrid:
    a: float
    b: float
    U: np.ndarray
    u_a: float
    u_b: float

    @property
    def J(self) -> int:
        return len(self.U)

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.J

    @property
    def midpoints(self) -> np.ndarray:
        return self.a + (np.arange(self.J) + 0.5) * self.h

    def padded(self) -> np.ndarray:
        """``U_{-1}, U_0, U_1, ..., U_J, U_{J+1}, U_{J+2}``."""
        U = self.U
        return np.concatenate([[2.0 * self.u_a - U[0], self.u_a], U,
                               [self.u_b, 2.0 * self.u_b - U[-1]]])

    def dg_coefficients(self) -> np.ndarray:
        """Equivalent piecewise-constant coefficients in the orthonormal basis (``U_j sqrt(h)``)."""
        return self.U * np.sqrt(self.h)


def fd_residual(grid: FDGrid, op: NumericalOperator, t: float = 0.0) -> np.ndarray:
    h = grid.h
    W = grid.padded()            # W[k] = U_{k-1}
    d2 = (W[2:] - 2.0 * W[1:-1] + W[:-2]) / h ** 2   # delta^2 U_j for j = 0..J+1
    dm = (W[2:-2] - W[1:-3]) / h                       # backward difference, j = 1..J
    dp = (W[3:-1] - W[2:-2]) / h                       # forward difference
    return op(d2[:-2], d2[1:-1], d2[1:-1], d2[2:], dm, dp, grid.U, grid.midpoints, t)


def fd_sweeps(op: NumericalOperator, grid: FDGrid, n_sweeps: int, t: float = 0.0) -> np.ndarray:
    """Fixed-point sweeps: solve for ``s = delta^2 U_j`` pointwise with the neighbours
    frozen, then recover ``U`` from ``delta^2 U = s`` with the Dirichlet values."""
    J, h = grid.J, grid.h
    x = grid.midpoints
    lap = (np.diag(-2.0 * np.ones(J)) + np.diag(np.ones(J - 1), 1) + np.diag(np.ones(J - 1), -1)) / h ** 2
    bvec = np.zeros(J)
    bvec[0] -= grid.u_a / h ** 2
    bvec[-1] -= grid.u_b / h ** 2
    F, alpha = op.base, float(op.alpha)
    U = grid.U.copy()
    for _ in range(n_sweeps):
        W = FDGrid(grid.a, grid.b, U, grid.u_a, grid.u_b).padded()
        d2 = (W[2:] - 2.0 * W[1:-1] + W[:-2]) / h ** 2
        qbar = 0.5 * (W[3:-1] - W[1:-3]) / h
        moment = d2[:-2] + d2[2:]

        def g(s, i):
            return F(s, qbar[i], U[i], x[i], t) + alpha * (moment[i] - 2.0 * s)

        def dg(s, i):
            return F.partials(s, qbar[i], U[i], x[i], t)[0] - 2.0 * alpha

        s = _pointwise_root(g, dg, d2[1:-1], x)
        U = np.linalg.solve(lap, s + bvec)
    return U


def fd_solve(op: NumericalOperator, problem, J: int, config: SolverConfig = None,
             initial: Optional[np.ndarray] = None, t: float = 0.0) -> FDGrid:
    """Damped Newton with a difference-quotient Jacobian.

    Starts from ``initial`` or the boundary-data secant; if Newton fails from
    the secant it is restarted after ``config.warm_start_sweeps`` fixed-point
    sweeps (:func:`fd_sweeps`).
    """
    config = config or SolverConfig()
    u_a, u_b = problem.bc.at(t)
    a, b = problem.a, problem.b
    grid = FDGrid(a, b, np.zeros(J), u_a, u_b)
    x = grid.midpoints

    def fun(U):
        return fd_residual(FDGrid(a, b, U, u_a, u_b), op, t)

    def run(U0):
        U, _ = newton(fun, lambda U: fd_jacobian(fun, U), np.asarray(U0, dtype=float),
                      config.newton_tol, config.max_newton_iters)
        return U

    if initial is not None:
        grid.U = run(initial)
        return grid
    grid.U = u_a + (u_b - u_a) * (x - a) / (b - a)
    try:
        grid.U = run(grid.U)
    except NonconvergenceError:
        if config.warm_start_sweeps <= 0:
            raise
        grid.U = run(fd_sweeps(op, grid, config.warm_start_sweeps, t))
    return grid
