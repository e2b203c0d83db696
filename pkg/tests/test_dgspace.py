import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from conftest import make_space
from ldg1d.dgspace import (DGFunction, error_norms, eval_at, eval_in_cell, eval_trace, inner, jump,
                           l2_project, read_coefficients_csv, reference_basis, write_coefficients_csv)
from ldg1d.mesh import OutOfDomainError


@pytest.mark.parametrize("r", [0, 1, 2, 3, 5])
def test_reference_basis_is_orthonormal(r):
    xi, w = np.polynomial.legendre.leggauss(r + 3)
    B = reference_basis(r, xi)
    np.testing.assert_allclose(B.T @ (w[:, None] * B), np.eye(r + 1), atol=1e-13)


def test_default_and_minimum_quadrature():
    assert make_space(0, 1, 3, 0).quad_order == 2
    assert make_space(0, 1, 3, 2).quad_order == 5
    assert make_space(0, 1, 3, 1, quad_order=2).quad_order == 2
    with pytest.raises(ValueError):
        make_space(0, 1, 3, 2, quad_order=2)
    with pytest.raises(ValueError):
        make_space(0, 1, 3, -1)


def test_projection_of_x_squared_matches_cell_averages():
    sp = make_space(0.0, 1.0, 2, 0)
    v = l2_project(sp, lambda x: x ** 2)
    means = [quad(lambda x: x ** 2, 0, 0.5)[0] / 0.5, quad(lambda x: x ** 2, 0.5, 1)[0] / 0.5]
    np.testing.assert_allclose(v(np.array([0.25, 0.75])), means, rtol=1e-14)
    np.testing.assert_allclose(means, [1 / 12, 7 / 12])


def test_projection_of_sine_matches_dense_quadrature():
    sp = make_space(0.0, 2 * np.pi, 8, 3)
    v = l2_project(sp, np.sin)
    xi, w = np.polynomial.legendre.leggauss(4 * sp.quad_order)
    for j in range(sp.J):
        c, h = sp.mesh.centers[j], sp.h[j]
        x = c + 0.5 * h * xi
        ref = (np.sin(x) * w) @ reference_basis(3, xi) * np.sqrt(h / 2.0)
        np.testing.assert_allclose(v.coeffs[j], ref, atol=1e-10)


@pytest.mark.parametrize("r", [0, 1, 2, 3])
def test_projection_reproduces_polynomials(r):
    sp = make_space(-1.0, 2.0, 5, r)
    f = np.polynomial.Polynomial(np.arange(1.0, r + 2.0))
    v = l2_project(sp, f)
    np.testing.assert_allclose(sp.values_at_quad(v.coeffs), f(sp.quad_points), atol=1e-12)
    assert error_norms(v, f)["linf"] < 1e-12


coeff_arrays = arrays(np.float64, (6, 3), elements=st.floats(-1e3, 1e3, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(coeff_arrays)
def test_parseval(c):
    sp = make_space(0.0, 3.0, 6, 2)
    v = DGFunction(sp, c)
    assert inner(v, v) == pytest.approx(np.sum(c ** 2), rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(coeff_arrays)
def test_projection_is_idempotent(c):
    sp = make_space(0.0, 3.0, 6, 2)
    v = DGFunction(sp, c)
    w = l2_project(sp, lambda x: eval_at(v, x.ravel()).reshape(x.shape))
    np.testing.assert_allclose(w.coeffs, c, atol=1e-12 * (1 + np.abs(c).max()))


def test_projection_error_is_orthogonal(rng):
    sp = make_space(0.0, 1.0, 4, 2)
    f = lambda x: np.exp(np.sin(3 * x))  # noqa: E731
    v = l2_project(sp, f)
    # (P f - f, phi) computed with a much finer rule vanishes
    xi, w = np.polynomial.legendre.leggauss(30)
    for j in range(sp.J):
        x = sp.mesh.centers[j] + 0.5 * sp.h[j] * xi
        phi = reference_basis(2, xi) * np.sqrt(2 / sp.h[j])
        resid = ((eval_in_cell(v, j + 1, x) - f(x)) * w * sp.h[j] / 2) @ phi
        assert np.abs(resid).max() < 1e-6   # only the default rule's own error remains


def test_traces_and_jumps():
    sp = make_space(0.0, 1.0, 2, 1)
    v = l2_project(sp, lambda x: np.where(x < 0.5, x, 2.0 + x))
    assert eval_trace(v, 1, "-") == pytest.approx(0.5)
    assert eval_trace(v, 1, "+") == pytest.approx(2.5)
    assert jump(v, 1) == pytest.approx(-2.0)
    assert sp.trace_vector(0, "+") @ v.vector == pytest.approx(0.0, abs=1e-14)
    assert sp.trace_vector(2, "-") @ v.vector == pytest.approx(3.0)
    with pytest.raises(IndexError):
        sp.trace_vector(0, "-")
    with pytest.raises(IndexError):
        sp.trace_vector(2, "+")
    with pytest.raises(IndexError):
        jump(v, 0)


def test_eval_at_uses_left_cell_at_interior_nodes():
    sp = make_space(0.0, 1.0, 2, 0)
    v = DGFunction(sp, np.array([[1.0], [2.0]]) * np.sqrt(0.5))
    assert v(0.5) == pytest.approx(1.0)
    np.testing.assert_allclose(v(np.array([0.0, 0.5, 0.51, 1.0])), [1, 1, 2, 2])
    with pytest.raises(OutOfDomainError):
        v(1.5)


def test_error_norms_of_known_difference():
    sp = make_space(0.0, 1.0, 4, 0)
    v = sp.zero()
    err = error_norms(v, lambda x: np.ones_like(x))
    assert err["l2"] == pytest.approx(1.0)
    assert err["linf"] == pytest.approx(1.0)
    # linf sees the endpoint values of x, not just quadrature points
    assert error_norms(v, lambda x: x)["linf"] == pytest.approx(1.0)


def test_function_arithmetic_and_shapes():
    sp = make_space(0.0, 1.0, 3, 1)
    a = sp.from_vector(np.arange(6.0))
    b = DGFunction(sp, np.ones((3, 2)))
    np.testing.assert_allclose((a + b - b).coeffs, a.coeffs)
    np.testing.assert_allclose((2 * a).vector, 2 * np.arange(6.0))
    np.testing.assert_allclose((-a).vector, -np.arange(6.0))
    with pytest.raises(ValueError):
        DGFunction(sp, np.ones(5))


def test_coefficient_csv_round_trip(tmp_path):
    sp = make_space(0.0, 1.0, 3, 2)
    v = l2_project(sp, np.cos)
    path = tmp_path / "c.csv"
    write_coefficients_csv(v, path)
    assert path.read_text().splitlines()[0] == "cell,coefficient,value"
    np.testing.assert_array_equal(read_coefficients_csv(sp, path).coeffs, v.coeffs)


def test_eval_at_keeps_array_shape():
    sp = make_space(0, 1, 4, 2)
    v = l2_project(sp, lambda x: x * x)
    x = np.array([[0.1, 0.2], [0.7, 0.9]])
    assert v(x).shape == (2, 2)
    assert np.allclose(v(x), x * x)
