"""Whole-domain LDG operators for the one-sided first and second derivatives.

Given ``u`` in the DG space and Dirichlet data ``(u_a, u_b)``, the discrete
derivatives are defined by

    (q_i, phi) + a_i(u, phi) = f_i(phi),           i = 1, 2
    (p_j, psi) + b_j(q_1, q_2; psi) = 0,           j = 1, ..., 4

with left-biased interior traces for ``q_1, p_1, p_3`` and right-biased ones
for ``q_2, p_2, p_4``.  The mass matrix is the identity, so every operator is
an explicit affine map of the coefficient vector of ``u``.

All matrices are stored ``[test, trial]`` so that ``(A @ v)[k] = a(v, phi_k)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dgspace import DGFunction, DGSpace

# order of the fields produced by LDGSystem.field_maps
FIELDS = ("p1", "p2", "p3", "p4", "q1", "q2", "u")


def kappa(r: int) -> int:
    return 0 if r == 0 else 1


def _volume_matrix(space: DGSpace) -> np.ndarray:
    """Block-diagonal matrix of ``(v, phi_x)`` over all cells."""
    ref = (space.dpsi * space.weights[:, None]).T @ space.psi  # [test k, trial l]
    nb = space.nb
    D = np.zeros((space.n_dof, space.n_dof))
    for j, h in enumerate(space.h):
        D[j * nb:(j + 1) * nb, j * nb:(j + 1) * nb] = (2.0 / h) * ref
    return D


@dataclass(frozen=True, eq=False)
class LDGSystem:
    space: DGSpace
    kappa_r: int
    A1: np.ndarray
    A2: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    B3: np.ndarray
    B4: np.ndarray
    # f_i(phi) = u_a * f{i}a + u_b * f{i}b
    f1a: np.ndarray
    f1b: np.ndarray
    f2a: np.ndarray
    f2b: np.ndarray
    # fields = L @ u + La * u_a + Lb * u_b, stacked in FIELDS order
    L: np.ndarray = field(init=False, repr=False)
    La: np.ndarray = field(init=False, repr=False)
    Lb: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.space.n_dof
        A = np.vstack([self.A1, self.A2])
        fa = np.concatenate([self.f1a, self.f2a])
        fb = np.concatenate([self.f1b, self.f2b])
        Bs = [self.B1, self.B2, self.B3, self.B4]
        L = np.vstack([B @ A for B in Bs] + [-A, np.eye(n)])
        La = np.concatenate([-(B @ fa) for B in Bs] + [fa, np.zeros(n)])
        Lb = np.concatenate([-(B @ fb) for B in Bs] + [fb, np.zeros(n)])
        for name, val in (("L", L), ("La", La), ("Lb", Lb)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_dof(self) -> int:
        return self.space.n_dof

    def f1(self, u_a: float, u_b: float) -> np.ndarray:
        return u_a * self.f1a + u_b * self.f1b

    def f2(self, u_a: float, u_b: float) -> np.ndarray:
        return u_a * self.f2a + u_b * self.f2b

    def field_vectors(self, u_vec: np.ndarray, u_a: float, u_b: float) -> np.ndarray:
        """All seven coefficient vectors, shape ``(7, n_dof)`` in ``FIELDS`` order."""
        out = self.L @ u_vec + u_a * self.La + u_b * self.Lb
        return out.reshape(len(FIELDS), self.n_dof)

    def field_map(self, name: str) -> np.ndarray:
        """Linear part ``d(field)/du`` of one field."""
        i = FIELDS.index(name)
        n = self.n_dof
        return self.L[i * n:(i + 1) * n]

    def dump_csv(self, directory) -> None:
        """Write every assembled matrix as ``row, col, value`` triplets (nonzeros only)."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name in ("A1", "A2", "B1", "B2", "B3", "B4"):
            M = getattr(self, name)
            with open(directory / f"{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["row", "col", "value"])
                for i, j in zip(*np.nonzero(M)):
                    w.writerow([i, j, repr(float(M[i, j]))])


def assemble(space: DGSpace) -> LDGSystem:
    """Assemble the bilinear forms ``a_1, a_2, b_1..b_4`` and loads ``f_1, f_2``."""
    J, n = space.J, space.n_dof
    kr = kappa(space.r)
    D = _volume_matrix(space)
    ta = space.trace_vector(0, "+")
    tb = space.trace_vector(J, "-")
    Paa = np.outer(ta, ta)
    Pbb = np.outer(tb, tb)

    # -sum_j v(x_j^s) [phi(x_j)], for s = - and s = +
    flux_left = np.zeros((n, n))
    flux_right = np.zeros((n, n))
    for j in range(1, J):
        tm = space.trace_vector(j, "-")
        tp = space.trace_vector(j, "+")
        jmp = tm - tp
        flux_left -= np.outer(jmp, tm)
        flux_right -= np.outer(jmp, tp)

    Z = np.zeros((n, n))
    A1 = D - (1 - kr) * Pbb + flux_left
    A2 = D + (1 - kr) * Paa + flux_right
    B1 = np.hstack([D + Paa - Pbb + flux_left, Z])
    B4 = np.hstack([Z, D + Paa - Pbb + flux_right])
    B2 = np.hstack([D + Paa - kr * Pbb + flux_right, -(1 - kr) * Pbb])
    B3 = np.hstack([(1 - kr) * Paa, D + kr * Paa - Pbb + flux_left])

    return LDGSystem(
        space=space, kappa_r=kr,
        A1=A1, A2=A2, B1=B1, B2=B2, B3=B3, B4=B4,
        f1a=-ta, f1b=kr * tb,
        f2a=-kr * ta, f2b=tb,
    )


def q_operators(sys: LDGSystem, u: DGFunction, u_a: float, u_b: float):
    """Left- and right-biased discrete first derivatives ``(q1, q2)`` of ``u``."""
    uv = u.vector
    q1 = sys.f1(u_a, u_b) - sys.A1 @ uv
    q2 = sys.f2(u_a, u_b) - sys.A2 @ uv
    return sys.space.from_vector(q1), sys.space.from_vector(q2)


def p_operators(sys: LDGSystem, q1: DGFunction, q2: DGFunction):
    """The four one-sided second derivatives ``(p1, p2, p3, p4)``."""
    qq = np.concatenate([q1.vector, q2.vector])
    return tuple(sys.space.from_vector(-(B @ qq)) for B in (sys.B1, sys.B2, sys.B3, sys.B4))


def q_operators_at_time(sys: LDGSystem, v: DGFunction, t: float, bc):
    """``(Q_1^k v, Q_2^k v)`` with boundary data ``bc.u_a(t), bc.u_b(t)``."""
    return q_operators(sys, v, bc.u_a(t), bc.u_b(t))


def p_operators_at_time(sys: LDGSystem, v: DGFunction, t: float, bc):
    """``(P_1^k v, ..., P_4^k v)``: the p-operators applied to the time-k q-operators."""
    return p_operators(sys, *q_operators_at_time(sys, v, t, bc))
