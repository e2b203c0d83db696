"""Acceptance criteria 1-9 at pinned tolerances.

Each test records one PASS/FAIL line (printed in the terminal summary) before
asserting, so a failing criterion still reports its numbers.
"""

import numpy as np
import pytest

from conftest import make_space, record
from ldg1d.dgspace import error_norms, inner, l2_project
from ldg1d.elliptic import fd_jacobian, jacobian, residual, solve_newton
from ldg1d.fd_oracle import fd_solve
from ldg1d.ldg_ops import assemble
from ldg1d.numop import NumericalOperator, check_consistency, check_gmonotonicity
from ldg1d.parabolic import TimeGrid, evolve
from ldg1d.problems import REGISTRY, get_problem
from ldg1d.study import RunConfig, run_convergence_study, run_selection_experiment

SEED = 20240611


def study(problem, r, J, **kw):
    rep = run_convergence_study(RunConfig(problem, r=r, J=J, **kw), write=False)
    bad = [row for row in rep.rows if row.status != "ok"]
    assert not bad, bad[0].status
    return rep


def within_factor(value, target, factor):
    return target / factor <= value <= target * factor


def test_criterion_1_monge_ampere_convergence():
    rep = study("test1", [1, 2], [4, 8, 16, 32], alpha=10.0)
    r1 = rep.for_r(1)
    orders = [row.linf_order for row in r1[1:]]
    ok_orders = all(abs(o - p) <= 0.25 for o, p in zip(orders, (1.84, 2.00, 2.00)))
    fine = rep.get(1, 32).linf
    r2_max = max(max(row.l2, row.linf) for row in rep.for_r(2))
    passed = ok_orders and within_factor(fine, 3.9e-4, 2.0) and r2_max <= 1e-8
    record(1, passed, f"r=1 Linf orders {np.round(orders, 2).tolist()}, h=1/32 Linf {fine:.2e} "
                      f"(reference 3.9e-04); r=2 max error {r2_max:.1e}")
    assert passed


def test_criterion_2_hjb_discrete_control():
    rep = study("test3", [2, 3], [4, 8, 16, 32, 64], alpha=4.0)
    e = rep.get(2, 64).l2  # h = 1/32 on (-1, 1)
    o = rep.get(2, 64).l2_order
    r3 = [row.l2_order for row in rep.for_r(3)[1:]]
    # r=3 is limited by the x|x|^3 regularity: the asymptotic rate is 3
    r3_ok = abs(r3[-1] - 3.0) <= 0.25 and all(v >= 2.75 for v in r3)
    passed = within_factor(e, 6.4e-6, 2.0) and o >= 2.8 and r3_ok
    record(2, passed, f"r=2 h=1/32 L2 {e:.2e} (reference 6.4e-06) order {o:.2f}; "
                      f"r=3 L2 orders {np.round(r3, 2).tolist()}")
    assert passed


def test_criterion_3_non_monotone_operator():
    rep = study("test2", [0, 1, 2, 3], [4, 8, 16, 32, 64], alpha=6.0)
    r2 = [row.l2_order for row in rep.for_r(2)[1:]] + [row.linf_order for row in rep.for_r(2)[1:]]
    in_band = all(1.8 <= o <= 3.0 for o in r2)
    fine = [rep.get(r, 64).l2 for r in (0, 1, 2, 3)]
    monotone = all(a > b for a, b in zip(fine, fine[1:]))
    passed = in_band and monotone
    record(3, passed, f"r=2 orders in [{min(r2):.2f}, {max(r2):.2f}]; "
                      f"h=1/32 L2 by r {[f'{v:.1e}' for v in fine]}")
    assert passed


def flat(errors):
    errors = np.asarray(errors)
    return errors.max() / errors.min() <= 10.0 or errors.max() <= 1e-10


@pytest.mark.slow
def test_criterion_4_product_nonlinearity():
    Js = [4, 8, 16]
    rk = study("test5", [2], Js, scheme="rk4", kappa_t=0.001, alpha=2.0)
    tr = study("test5", [2], Js, scheme="trapezoidal", dt=0.001, alpha=2.0)
    rk_e = [row.l2 for row in rk.rows]
    tr_e = [row.l2 for row in tr.rows]
    passed = max(rk_e) <= 1e-6 and flat(rk_e) and max(tr_e) <= 1e-6 and flat(tr_e)
    record(4, passed, f"RK4 L2 {[f'{v:.1e}' for v in rk_e]} (reference 2.4e-08); "
                      f"trapezoidal L2 {[f'{v:.1e}' for v in tr_e]} (reference 1.1e-07)")
    assert passed


@pytest.mark.slow
def test_criterion_5_hjb_evolution_rk4():
    prob = get_problem("test7")
    op = NumericalOperator(prob.F, 2.0)
    errs = []
    for J in (16, 32):
        sp = make_space(prob.a, prob.b, J, 3)
        grid = TimeGrid.from_cfl(3.10, 0.0005, sp.mesh.h_max)
        u = evolve("rk4", prob, sp, grid, op).u
        errs.append(error_norms(u, prob.exact_at(grid.T))["l2"])
    o = np.log2(errs[0] / errs[1])
    passed = o >= 3.7 and within_factor(errs[1], 2.2e-6, 3.0)
    record(5, passed, f"r=3 L2 {errs[0]:.2e} -> {errs[1]:.2e}, order {o:.2f} (reference 2.2e-06, 4.02)")
    assert passed


def test_criterion_6_viscosity_selection():
    cases = [((40.0, 0, 40), "u_plus"), ((0.0, 0, 40), "mu"),
             ((-40.0, 0, 40), "u_minus"), ((-20.0, 2, 20), "u_minus")]
    got = [run_selection_experiment(*args).converged_to for args, _ in cases]
    passed = got == [want for _, want in cases]
    record(6, passed, ", ".join(f"alpha={a:g} r={r} J={J} -> {g}"
                                for ((a, r, J), _), g in zip(cases, got)))
    assert passed


def test_criterion_7_finite_difference_equivalence():
    worst = 0.0
    for name in ("test1", "test2", "test3", "test4"):
        prob = get_problem(name)
        op = NumericalOperator(prob.F, prob.alpha_default)
        for J in (8, 16, 32):
            grid = fd_solve(op, prob, J)
            sp = make_space(prob.a, prob.b, J, 0, quad_order=1)
            u = solve_newton(assemble(sp), op, prob).u
            worst = max(worst, np.max(np.abs(u.vector - grid.dg_coefficients())))
    passed = worst <= 1e-9
    record(7, passed, f"max coefficient difference {worst:.1e} over tests 1-4, J in 8,16,32")
    assert passed


def operator_samples(prob, rng, n):
    p = rng.uniform(-2, 2, n)
    if prob.name == "test6":
        p = np.abs(p)  # ln(p + 1) needs p > -1
    x = rng.uniform(prob.a, prob.b, n)
    t = rng.uniform(0, prob.defaults.get("T", 0.0), n)
    return np.column_stack([p, rng.uniform(-2, 2, n), rng.uniform(-2, 2, n), x, t])


def test_criterion_8_operator_properties():
    rng = np.random.default_rng(SEED)
    notes = []
    ok = True
    for name in sorted(REGISTRY):
        prob = get_problem(name)
        op = NumericalOperator(prob.F, prob.alpha_default)
        s = operator_samples(prob, rng, 10_000)
        cons = check_consistency(op, s)
        mono = check_gmonotonicity(op, s[:2000])
        p, q, u, x, t = s.T
        moment = np.max(np.abs(op(p, p, p, p, q, q, u, x, t) - prob.F(p, q, u, x, t)))
        ok &= cons.passed and mono.passed and moment <= 1e-12
        if not (cons.passed and mono.passed):
            notes.append(f"{name}: {cons}; {mono}")
    neg = check_gmonotonicity(NumericalOperator(get_problem("test1").F, -1.0),
                              operator_samples(get_problem("test1"), rng, 200))
    passed = ok and not neg.passed
    record(8, passed, f"consistency and g-monotonicity pass on all 8 operators; "
                      f"alpha=-1 on test1 gives {len(neg.violations)} violations"
           + ("; " + "; ".join(notes) if notes else ""))
    assert passed


def test_criterion_9_numerical_checks():
    rng = np.random.default_rng(SEED)
    jac_err = 0.0
    for name in sorted(REGISTRY):
        prob = get_problem(name)
        sp = make_space(prob.a, prob.b, 8, 1)
        sys = assemble(sp)
        op = NumericalOperator(prob.F, prob.alpha_default)
        t = 0.3 if prob.kind == "parabolic" else 0.0
        bc = prob.bc.at(t)
        base = l2_project(sp, prob.exact_at(t)).vector
        # scale the noise by h^2 so second differences move by O(0.01); ln(p + 1) stays defined
        amp = 0.01 * sp.mesh.h_max ** 2
        for _ in range(3):
            uv = base + amp * rng.standard_normal(base.size)
            Ja = jacobian(sys, op, uv, bc, t)
            Jf = fd_jacobian(lambda v: residual(sys, op, sp.from_vector(v), bc, t), uv)
            jac_err = max(jac_err, np.max(np.abs(Ja - Jf)) / max(1.0, np.max(np.abs(Ja))))

    parseval = idem = 0.0
    for r in (0, 1, 2, 3):
        sp = make_space(-1, 2, 7, r)
        v = sp.from_vector(rng.standard_normal(sp.n_dof))
        parseval = max(parseval, abs(inner(v, v) - np.sum(v.coeffs ** 2)) / np.sum(v.coeffs ** 2))
        w = l2_project(sp, np.cos)
        idem = max(idem, np.max(np.abs(l2_project(sp, w).coeffs - w.coeffs)))

    worst_res = 0.0
    for name in sorted(REGISTRY):
        prob = get_problem(name)
        x = rng.uniform(prob.a, prob.b, 1000)
        t = rng.uniform(0, prob.defaults.get("T", 0.0), 1000)
        keep = np.ones(x.size, dtype=bool)
        for k in prob.kinks:
            keep &= np.abs(x - k) > 1e-3
        if name == "test7":
            # the optimal control switches across x = pi and t = pi/2
            keep &= (np.abs(x - np.pi) > 1e-3) & (np.abs(t - np.pi / 2) > 1e-3)
        worst_res = max(worst_res, np.max(np.abs(prob.pde_residual(x[keep], t[keep]))))

    passed = jac_err <= 1e-5 and parseval <= 1e-12 and idem <= 1e-12 and worst_res <= 1e-8
    record(9, passed, f"Jacobian rel. diff {jac_err:.1e}; Parseval {parseval:.1e}; "
                      f"idempotence {idem:.1e}; max PDE residual {worst_res:.1e}")
    assert passed
