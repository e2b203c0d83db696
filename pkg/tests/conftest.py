import numpy as np
import pytest

from ldg1d.dgspace import DGSpace
from ldg1d.mesh import uniform_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_space(a, b, J, r, quad_order=None):
    return DGSpace(uniform_mesh(a, b, J), r, quad_order)


# criterion number -> (passed, detail), filled by the acceptance suite
ACCEPTANCE = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"CRITERION {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"CRITERION {k}: {'PASS' if passed else 'FAIL'} - {detail}")
