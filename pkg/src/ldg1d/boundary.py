"""Dirichlet and initial data containers shared by the stationary and evolution solvers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable


def _const(c: float) -> Callable:
    c = float(c)
    return lambda t: c


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet values ``u(a, t) = u_a(t)`` and ``u(b, t) = u_b(t)``."""

    u_a: Callable
    u_b: Callable

    @classmethod
    def constant(cls, u_a: float, u_b: float) -> "BoundaryData":
        return cls(_const(u_a), _const(u_b))

    def at(self, t: float) -> tuple[float, float]:
        return float(self.u_a(t)), float(self.u_b(t))
