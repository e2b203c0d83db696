"""Broken polynomial spaces on a 1D mesh with orthonormal Legendre bases.

On cell ``I_j`` with centre ``c_j`` and width ``h_j`` the basis is

    phi_k(x) = sqrt(2 / h_j) * sqrt((2k + 1) / 2) * P_k(2 (x - c_j) / h_j),

so the broken mass matrix is the identity and the L2 projection is a plain
inner product against the basis.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import legendre

from .mesh import Mesh, OutOfDomainError, locate

LINF_SAMPLES_PER_CELL = 10


def reference_basis(r: int, xi) -> np.ndarray:
    """Orthonormal Legendre polynomials on [-1, 1]; shape ``xi.shape + (r+1,)``."""
    xi = np.asarray(xi, dtype=float)
    scale = np.sqrt((2.0 * np.arange(r + 1) + 1.0) / 2.0)
    return legendre.legvander(xi, r) * scale


def reference_basis_derivative(r: int, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape + (r + 1,))
    for k in range(1, r + 1):
        c = np.zeros(k + 1)
        c[k] = np.sqrt((2.0 * k + 1.0) / 2.0)
        out[..., k] = legendre.legval(xi, legendre.legder(c))
    return out


@dataclass(frozen=True, eq=False)
class DGSpace:
    """Piecewise polynomials of degree ``r`` on ``mesh``."""

    mesh: Mesh
    r: int
    quad_order: int = None
    # reference-cell data, filled in __post_init__
    xi: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    psi: np.ndarray = field(init=False, repr=False)
    dpsi: np.ndarray = field(init=False, repr=False)
    psi_left: np.ndarray = field(init=False, repr=False)
    psi_right: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 0:
            raise ValueError(f"degree must be a nonnegative integer, got {self.r!r}")
        nq = self.quad_order
        if nq is None:
            nq = max(self.r + 2, 2 * self.r + 1)
        if nq < self.r + 1:
            # r + 1 Gauss points integrate every degree-2r product exactly
            raise ValueError(f"quad_order must be at least r + 1 = {self.r + 1}")
        xi, w = legendre.leggauss(nq)
        object.__setattr__(self, "quad_order", int(nq))
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "psi", reference_basis(self.r, xi))
        object.__setattr__(self, "dpsi", reference_basis_derivative(self.r, xi))
        object.__setattr__(self, "psi_left", reference_basis(self.r, -1.0))
        object.__setattr__(self, "psi_right", reference_basis(self.r, 1.0))

    @property
    def J(self) -> int:
        return self.mesh.J

    @property
    def nb(self) -> int:
        """Basis functions per cell."""
        return self.r + 1

    @property
    def n_dof(self) -> int:
        return self.mesh.J * (self.r + 1)

    @property
    def h(self) -> np.ndarray:
        return self.mesh.widths

    @property
    def quad_points(self) -> np.ndarray:
        """Physical quadrature points, shape ``(J, quad_order)``."""
        return self.mesh.centers[:, None] + 0.5 * self.h[:, None] * self.xi[None, :]

    # -- cell-local scalings ------------------------------------------------
    @property
    def value_scale(self) -> np.ndarray:
        return np.sqrt(2.0 / self.h)

    @property
    def project_scale(self) -> np.ndarray:
        return np.sqrt(self.h / 2.0)

    # -- evaluation helpers on raw coefficient arrays -----------------------
    def values_at_quad(self, coeffs: np.ndarray) -> np.ndarray:
        """Evaluate coefficient arrays ``(..., J, r+1)`` at quadrature points."""
        coeffs = np.asarray(coeffs, dtype=float)
        return (coeffs * self.value_scale[:, None]) @ self.psi.T

    def project_quad_values(self, values: np.ndarray) -> np.ndarray:
        """Coefficients of the L2 projection of values sampled at quadrature points."""
        return self.project_scale[:, None] * ((values * self.weights) @ self.psi)

    def eval_matrix(self) -> np.ndarray:
        """Dense map from the coefficient vector to values at all quadrature points."""
        J, nq, nb = self.J, self.quad_order, self.nb
        E = np.zeros((J * nq, J * nb))
        for j in range(J):
            E[j * nq:(j + 1) * nq, j * nb:(j + 1) * nb] = self.value_scale[j] * self.psi
        return E

    def trace_vector(self, node: int, side: str) -> np.ndarray:
        """Row vector ``t`` with ``t @ coeffs == v(x_node^side)``."""
        J, nb = self.J, self.nb
        t = np.zeros(J * nb)
        if side == "-":
            if not 1 <= node <= J:
                raise IndexError(f"no cell to the left of node {node}")
            j = node - 1
            t[j * nb:(j + 1) * nb] = self.value_scale[j] * self.psi_right
        elif side == "+":
            if not 0 <= node <= J - 1:
                raise IndexError(f"no cell to the right of node {node}")
            j = node
            t[j * nb:(j + 1) * nb] = self.value_scale[j] * self.psi_left
        else:
            raise ValueError(f"side must be '-' or '+', got {side!r}")
        return t

    def zero(self) -> "DGFunction":
        return DGFunction(self, np.zeros((self.J, self.nb)))

    def from_vector(self, vec) -> "DGFunction":
        return DGFunction(self, np.asarray(vec, dtype=float).reshape(self.J, self.nb))


@dataclass
class DGFunction:
    """Element of a :class:`DGSpace`; ``coeffs[j-1, k]`` multiplies ``phi_k`` on cell ``j``."""

    space: DGSpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape == (self.space.n_dof,):
            c = c.reshape(self.space.J, self.space.nb)
        if c.shape != (self.space.J, self.space.nb):
            raise ValueError(
                f"coefficient shape {c.shape} does not match space "
                f"({self.space.J}, {self.space.nb})")
        self.coeffs = c

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    def __call__(self, x):
        return eval_at(self, x)

    def __add__(self, other):
        return DGFunction(self.space, self.coeffs + _coeffs_of(other))

    def __sub__(self, other):
        return DGFunction(self.space, self.coeffs - _coeffs_of(other))

    def __mul__(self, s: float):
        return DGFunction(self.space, self.coeffs * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return DGFunction(self.space, -self.coeffs)

    def copy(self) -> "DGFunction":
        return DGFunction(self.space, self.coeffs.copy())

    def to_csv(self, path) -> None:
        write_coefficients_csv(self, path)


def _coeffs_of(other):
    return other.coeffs if isinstance(other, DGFunction) else np.asarray(other)


def inner(v: DGFunction, w: DGFunction) -> float:
    """Broken L2 inner product by cell quadrature."""
    sp = v.space
    vals = sp.values_at_quad(v.coeffs) * sp.values_at_quad(w.coeffs)
    return float(np.sum((vals @ sp.weights) * sp.h / 2.0))


def eval_trace(v: DGFunction, j: int, side: str) -> float:
    """One-sided limit ``v(x_j^-)`` or ``v(x_j^+)`` at node ``j`` (0-based node index)."""
    return float(v.space.trace_vector(j, side) @ v.vector)


def jump(v: DGFunction, j: int) -> float:
    """``[v(x_j)] = v(x_j^-) - v(x_j^+)`` at an interior node."""
    if not 1 <= j <= v.space.J - 1:
        raise IndexError(f"jump is defined at interior nodes 1..{v.space.J - 1}, got {j}")
    return eval_trace(v, j, "-") - eval_trace(v, j, "+")


def l2_project(space: DGSpace, f: Callable) -> DGFunction:
    """Broken L2 projection of a vectorized pointwise function."""
    vals = np.asarray(f(space.quad_points), dtype=float)
    vals = np.broadcast_to(vals, space.quad_points.shape)
    return DGFunction(space, space.project_quad_values(vals))


def eval_in_cell(v: DGFunction, j: int, x) -> np.ndarray | float:
    """Evaluate the polynomial of cell ``j`` (1-based) at ``x``, which may be its endpoints."""
    sp = v.space
    if not 1 <= j <= sp.J:
        raise IndexError(f"cell index {j} outside 1..{sp.J}")
    h = sp.h[j - 1]
    xi = 2.0 * (np.asarray(x, dtype=float) - sp.mesh.centers[j - 1]) / h
    out = reference_basis(sp.r, xi) @ v.coeffs[j - 1] * np.sqrt(2.0 / h)
    return float(out) if np.ndim(out) == 0 else out


def eval_at(v: DGFunction, x) -> np.ndarray | float:
    """Evaluate ``v`` at points of the domain (any array shape); interior nodes use the left cell."""
    xs = np.asarray(x, dtype=float).ravel()
    mesh = v.space.mesh
    if np.any(xs < mesh.a) or np.any(xs > mesh.b):
        raise OutOfDomainError(f"points outside [{mesh.a}, {mesh.b}]")
    cells = np.maximum(np.searchsorted(mesh.nodes, xs, side="left"), 1)
    h = mesh.widths[cells - 1]
    xi = 2.0 * (xs - mesh.centers[cells - 1]) / h
    vals = np.einsum("nk,nk->n", reference_basis(v.space.r, xi), v.coeffs[cells - 1])
    vals *= np.sqrt(2.0 / h)
    return float(vals[0]) if np.ndim(x) == 0 else vals.reshape(np.shape(x))


def sample_points(space: DGSpace) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell sample abscissae used for max-norm estimates.

    Returns ``(cells, xi)`` broadcastable arrays: quadrature points, both
    endpoints and ``LINF_SAMPLES_PER_CELL`` uniform points of every cell.
    """
    xi = np.concatenate([space.xi, [-1.0, 1.0], np.linspace(-1.0, 1.0, LINF_SAMPLES_PER_CELL)])
    return np.arange(space.J), xi


def error_norms(v: DGFunction, exact: Callable) -> dict:
    """L2 and (sampled) max-norm of ``v - exact``."""
    sp = v.space
    diff = sp.values_at_quad(v.coeffs) - exact(sp.quad_points)
    l2 = np.sqrt(np.sum((diff ** 2 @ sp.weights) * sp.h / 2.0))
    _, xi = sample_points(sp)
    x = sp.mesh.centers[:, None] + 0.5 * sp.h[:, None] * xi[None, :]
    vals = (v.coeffs * sp.value_scale[:, None]) @ reference_basis(sp.r, xi).T
    linf = np.max(np.abs(vals - exact(x)))
    return {"l2": float(l2), "linf": float(linf)}


def write_coefficients_csv(v: DGFunction, path) -> None:
    """Rows ``cell, coefficient, value`` with 1-based cells and 0-based coefficient index."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "coefficient", "value"])
        for j in range(v.space.J):
            for k in range(v.space.nb):
                w.writerow([j + 1, k, repr(float(v.coeffs[j, k]))])


def read_coefficients_csv(space: DGSpace, path) -> DGFunction:
    coeffs = np.zeros((space.J, space.nb))
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            coeffs[int(row["cell"]) - 1, int(row["coefficient"])] = float(row["value"])
    return DGFunction(space, coeffs)
