"""One-dimensional partitions of an interval [a, b]."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class OutOfDomainError(ValueError):
    """Raised when a point lies outside the closed mesh interval."""


@dataclass(frozen=True)
class Mesh:
    """Ordered partition ``a = x_0 < x_1 < ... < x_J = b``.

    Cells are numbered ``1..J``; cell ``j`` is ``(x_{j-1}, x_j)``.
    """

    nodes: np.ndarray
    widths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a mesh needs at least two nodes")
        widths = np.diff(nodes)
        if np.any(widths <= 0.0):
            raise ValueError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        widths.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "widths", widths)

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def J(self) -> int:
        return self.nodes.size - 1

    @property
    def h_max(self) -> float:
        return float(self.widths.max())

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    def locate(self, x: float) -> int:
        return locate(self, x)


def uniform_mesh(a: float, b: float, J: int) -> Mesh:
    """Uniform partition of ``[a, b]`` into ``J`` cells."""
    if int(J) != J or J < 1:
        raise ValueError(f"cell count must be a positive integer, got {J!r}")
    if not a < b:
        raise ValueError(f"need a < b, got a={a!r}, b={b!r}")
    J = int(J)
    nodes = a + (b - a) * np.arange(J + 1) / J
    nodes[-1] = b
    return Mesh(nodes)


def locate(mesh: Mesh, x: float) -> int:
    """Return the 1-based index of the cell containing ``x``.

    A point on an interior node belongs to the cell on its left; ``a`` belongs
    to cell 1.
    """
    if not mesh.a <= x <= mesh.b:
        raise OutOfDomainError(f"x={x!r} outside [{mesh.a}, {mesh.b}]")
    j = int(np.searchsorted(mesh.nodes, x, side="left"))
    return max(j, 1)
