import numpy as np
import pytest

from conftest import make_space
from ldg1d.dgspace import error_norms
from ldg1d.elliptic import SolverConfig, residual, solve_newton
from ldg1d.fd_oracle import FDGrid, fd_residual, fd_solve, fd_sweeps
from ldg1d.ldg_ops import assemble
from ldg1d.numop import NumericalOperator
from ldg1d.problems import get_problem


def test_ghost_values():
    g = FDGrid(0.0, 1.0, np.array([1.0, 2.0, 3.0]), 0.5, 4.0)
    assert np.array_equal(g.padded(), [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0])
    assert g.h == pytest.approx(1 / 3)
    assert np.allclose(g.midpoints, [1 / 6, 0.5, 5 / 6])
    assert np.allclose(g.dg_coefficients(), g.U * np.sqrt(1 / 3))


def test_residual_of_exact_quadratic():
    # second differences of x^2/2 are exactly 1 away from the boundary data
    prob = get_problem("test1")
    J = 8
    x = (np.arange(J) + 0.5) / J
    g = FDGrid(0.0, 1.0, 0.5 * x ** 2, 0.0, 0.5)
    res = fd_residual(g, NumericalOperator(prob.F, 10.0))
    assert np.max(np.abs(res[2:-2])) < 1e-10
    assert np.max(np.abs(res)) > 1.0  # the boundary value sits h/2 from the first midpoint


@pytest.mark.parametrize("name", ["test1", "test2", "test3", "test4"])
def test_fd_residual_equals_r0_ldg_with_midpoint_rule(rng, name):
    prob = get_problem(name)
    J = 10
    op = NumericalOperator(prob.F, prob.alpha_default)
    sp = make_space(prob.a, prob.b, J, 0, quad_order=1)
    U = prob.exact(sp.mesh.centers) + 0.05 * rng.standard_normal(J)
    ua, ub = prob.bc.at(0.0)
    g = FDGrid(prob.a, prob.b, U, ua, ub)
    dg = residual(assemble(sp), op, sp.from_vector(g.dg_coefficients()), (ua, ub))
    # the DG residual is the FD residual tested against the scaled basis function
    assert np.allclose(dg / np.sqrt(g.h), fd_residual(g, op), rtol=1e-11, atol=1e-9)


@pytest.mark.parametrize("name", ["test1", "test3"])
def test_fd_solve_matches_ldg_r0(name):
    prob = get_problem(name)
    J = 16
    op = NumericalOperator(prob.F, prob.alpha_default)
    g = fd_solve(op, prob, J)
    sp = make_space(prob.a, prob.b, J, 0, quad_order=1)
    state = solve_newton(assemble(sp), op, prob)
    assert np.max(np.abs(state.u.vector - g.dg_coefficients())) < 1e-9
    assert np.max(np.abs(fd_residual(g, op))) < 1e-8


def test_fd_solution_converges():
    prob = get_problem("test1")
    op = NumericalOperator(prob.F, 10.0)
    errs = []
    for J in (8, 16, 32):
        g = fd_solve(op, prob, J)
        errs.append(np.max(np.abs(g.U - prob.exact(g.midpoints))))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    # the boundary value at distance h/2 limits the nodal rate below one
    assert np.all(rates > 0.6)


def test_sweeps_reduce_residual():
    prob = get_problem("test1")
    op = NumericalOperator(prob.F, 10.0)
    J = 16
    x = (np.arange(J) + 0.5) / J
    g = FDGrid(0.0, 1.0, 0.5 * x, 0.0, 0.5)
    r0 = np.max(np.abs(fd_residual(g, op)))
    U = fd_sweeps(op, g, 200)
    r1 = np.max(np.abs(fd_residual(FDGrid(0.0, 1.0, U, 0.0, 0.5), op)))
    assert r1 < 1e-3 * r0


def test_fd_solve_from_initial_guess():
    prob = get_problem("test1")
    op = NumericalOperator(prob.F, 10.0)
    ref = fd_solve(op, prob, 8)
    again = fd_solve(op, prob, 8, SolverConfig(), initial=ref.U + 1e-3)
    assert np.allclose(again.U, ref.U, atol=1e-10)
