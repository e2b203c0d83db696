import csv
import math

import numpy as np
import pytest

from conftest import make_space
from ldg1d.dgspace import l2_project
from ldg1d.problems import mu, u_minus, u_plus
from ldg1d.study import (RunConfig, StudyReport, StudyRow, classify, format_markdown, order,
                         run_convergence_study, run_selection_experiment, sample_solution, sci2,
                         write_solution_csv)


def test_order():
    assert order(4e-2, 1e-2, 0.5, 0.25) == pytest.approx(2.0)
    assert order(1.0, 1.0, 0.5, 0.25) == 0.0
    assert math.isnan(order(0.0, 1e-3, 0.5, 0.25))
    assert math.isnan(order(math.nan, 1e-3, 0.5, 0.25))


def test_sci2():
    assert sci2(3.94e-4) == "3.9e-04"
    assert sci2(math.nan) == "nan"


def test_run_config_validation():
    with pytest.raises(ValueError, match="strictly increasing"):
        RunConfig("test1", J=[8, 4])
    with pytest.raises(ValueError, match="exactly one"):
        RunConfig("test5", scheme="rk4", dt=0.01, kappa_t=0.001)
    with pytest.raises(ValueError, match="unknown solver"):
        RunConfig("test1", solver="bisection")
    with pytest.raises(ValueError, match="does not apply"):
        RunConfig("test1", scheme="rk4").resolved_scheme()
    assert RunConfig("test1").resolved_scheme() == "stationary"
    assert RunConfig("test7").resolved_scheme() == "rk4"


def test_time_grid_resolution():
    cfg = RunConfig("test7", scheme="trapezoidal")
    from ldg1d.problems import get_problem
    prob = get_problem("test7")
    assert cfg.time_grid(prob, 1, 0.5).n_steps == 100
    assert RunConfig("test7", kappa_t=0.01).time_grid(prob, 1, 0.5).dt == pytest.approx(0.0025, rel=0.02)
    assert RunConfig("test7", T=1.0, dt=0.1).time_grid(prob, 1, 0.5).n_steps == 10


def test_study_table_and_files(tmp_path):
    out = tmp_path / "tables" / "t1.md"
    report = run_convergence_study(RunConfig("test1", r=[0, 1], J=[4, 8, 16], out=str(out)))
    assert all(row.status == "ok" for row in report.rows)
    row = report.get(1, 16)
    assert 1.5 < row.linf_order < 2.5
    assert math.isnan(report.get(0, 4).l2_order)
    md = out.read_text()
    assert md.splitlines()[0].startswith("| r | Norm | h = 0.25 |")
    assert "Linf" in md and "Failures" not in md
    names = sorted(p.name for p in out.parent.iterdir())
    assert names == ["t1.md", "t1.png", "t1_r0.csv", "t1_r1.csv"]
    with open(out.parent / "t1_r1.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["J", "h", "l2", "l2_order", "linf", "linf_order"]
    assert rows[1][3] == "nan"
    assert float(rows[3][4]) == row.linf
    first = (out.parent / "t1_r1.csv").read_bytes()
    run_convergence_study(RunConfig("test1", r=[0, 1], J=[4, 8, 16], out=str(out)))
    assert (out.parent / "t1_r1.csv").read_bytes() == first


def test_failures_are_recorded_and_sweep_continues():
    # without the warm start and with a single Newton step the fine meshes cannot converge
    cfg = RunConfig("test2", r=[1], J=[4, 8], max_newton_iters=1)
    report = run_convergence_study(cfg, write=False)
    assert len(report.rows) == 2
    assert any(row.status.startswith("failed") for row in report.rows)
    md = format_markdown(report)
    assert "fail" in md and "Failures:" in md


def test_markdown_layout():
    cfg = RunConfig("test1", r=[2], J=[4, 8])
    rep = StudyReport(cfg, rows=[StudyRow(2, 4, 0.25, 1e-3, 2e-3),
                                 StudyRow(2, 8, 0.125, 2.5e-4, 5e-4, 2.0, 2.0)])
    lines = format_markdown(rep).splitlines()
    assert lines[0] == "| r | Norm | h = 0.25 | h = 0.125 | Order |"
    assert lines[2] == "| 2 | L2 | 1.0e-03 | 2.5e-04 | 2.00 |"
    assert lines[3] == "|  | Linf | 2.0e-03 | 5.0e-04 | 2.00 |"


def test_parabolic_study_runs():
    rep = run_convergence_study(RunConfig("test8", r=[1], J=[4, 8], scheme="trapezoidal", T=0.05,
                                          dt=0.01), write=False)
    assert all(row.status == "ok" for row in rep.rows)
    assert rep.get(1, 8).l2 < rep.get(1, 4).l2


def test_solution_csv(tmp_path):
    sp = make_space(0, 1, 3, 1)
    u = l2_project(sp, lambda x: 2 * x)
    x, vals = sample_solution(u, per_cell=5)
    assert x.size == 15 and np.allclose(vals, 2 * x)
    path = tmp_path / "sol.csv"
    write_solution_csv(u, lambda x: 2 * x, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x_sample", "u_h", "exact", "error"]
    assert len(rows) == 1 + 33
    assert abs(float(rows[5][3])) < 1e-14


def test_classify():
    sp = make_space(0, 1, 16, 1)
    fx = {"u_plus": u_plus, "u_minus": u_minus, "mu": mu}
    assert classify(l2_project(sp, u_plus), fx, 1e-3)[0] == "u_plus"
    assert classify(l2_project(sp, mu), fx, 1e-3)[0] == "mu"
    halfway = l2_project(sp, lambda x: 0.5 * (u_plus(x) + u_minus(x)))
    assert classify(halfway, fx, 1e-3)[0] == "other"


@pytest.mark.parametrize("alpha, r, J, expected", [(40, 0, 40, "u_plus"), (0, 0, 40, "mu"),
                                                   (-40, 0, 40, "u_minus")])
def test_selection_experiment(alpha, r, J, expected):
    res = run_selection_experiment(alpha, r, J)
    assert res.converged_to == expected, res.diagnostics
