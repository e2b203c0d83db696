"""The benchmark problems: four stationary and four evolution problems.

Every problem carries ``F`` with analytic partials, Dirichlet data, the
exact solution and its derivatives, and the moment coefficient ``alpha``
used for the reference runs.  Control-set infima are reduced to closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .boundary import BoundaryData
from .numop import PointwiseOperator

LN = np.log


@dataclass(frozen=True)
class Problem:
    name: str
    kind: str  # "elliptic" or "parabolic"
    domain: tuple
    F: PointwiseOperator
    bc: BoundaryData
    alpha_default: float
    exact: Optional[Callable] = None        # exact(x, t)
    exact_x: Optional[Callable] = None
    exact_xx: Optional[Callable] = None
    exact_t: Optional[Callable] = None
    u0: Optional[Callable] = None           # u0(x)
    kinks: tuple = ()
    description: str = ""
    defaults: dict = field(default_factory=dict)

    @property
    def a(self) -> float:
        return float(self.domain[0])

    @property
    def b(self) -> float:
        return float(self.domain[1])

    def exact_at(self, t: float = 0.0) -> Callable:
        return lambda x: self.exact(x, t)

    def pde_residual(self, x, t=0.0):
        """``F(u_xx, u_x, u, x, t)`` (plus ``u_t`` for evolution problems) at the exact solution."""
        res = self.F(self.exact_xx(x, t), self.exact_x(x, t), self.exact(x, t), x, t)
        if self.kind == "parabolic":
            res = res + self.exact_t(x, t)
        return res


def _zeros(*args):
    return np.zeros(np.broadcast(*args[:4]).shape)


def _ones(*args):
    return np.ones(np.broadcast(*args[:4]).shape)


# ---------------------------------------------------------------------------
# stationary problems

def test1() -> Problem:
    """Monge-Ampere type ``-u_xx^2 + 1 = 0`` on (0, 1); viscosity solution x^2/2."""
    F = PointwiseOperator(
        F=lambda p, q, u, x, t: -p ** 2 + 1.0,
        dF_dp=lambda p, q, u, x, t: -2.0 * p,
        dF_dq=_zeros, dF_du=_zeros,
    )
    return Problem(
        name="test1", kind="elliptic", domain=(0.0, 1.0), F=F,
        bc=BoundaryData.constant(0.0, 0.5), alpha_default=10.0,
        exact=lambda x, t=0.0: 0.5 * np.asarray(x) ** 2,
        exact_x=lambda x, t=0.0: np.asarray(x, dtype=float),
        exact_xx=lambda x, t=0.0: np.ones_like(np.asarray(x, dtype=float)),
        description="-u_xx^2 + 1 = 0, u(0)=0, u(1)=1/2",
        defaults={"J": [4, 8, 16, 32], "r": [0, 1, 2]},
    )


def _test2_source(x):
    x = np.asarray(x, dtype=float)
    sgn = np.sign(x)  # 0 at x = 0 selects the second branch
    return 2.0 * sgn * np.cos(x ** 2) - 4.0 * x ** 2 * np.sin(x * np.abs(x)) \
        + 2.0 * np.cos(x / 2.0) + 2.0


def test2() -> Problem:
    """``-u_xx^3 + u_xx + S^3 - S = 0`` on (-1, 1); not monotone in u_xx."""
    def F(p, q, u, x, t):
        S = _test2_source(x)
        return -p ** 3 + p + S ** 3 - S

    def exact(x, t=0.0):
        x = np.asarray(x, dtype=float)
        return np.sin(x * np.abs(x)) - 8.0 * np.cos(x / 2.0) + x ** 2 + 8.0

    def exact_x(x, t=0.0):
        x = np.asarray(x, dtype=float)
        return 2.0 * np.abs(x) * np.cos(x ** 2) + 4.0 * np.sin(x / 2.0) + 2.0 * x

    return Problem(
        name="test2", kind="elliptic", domain=(-1.0, 1.0),
        F=PointwiseOperator(F, dF_dp=lambda p, q, u, x, t: -3.0 * p ** 2 + 1.0,
                            dF_dq=_zeros, dF_du=_zeros),
        bc=BoundaryData.constant(exact(-1.0), exact(1.0)), alpha_default=6.0,
        exact=exact, exact_x=exact_x, exact_xx=lambda x, t=0.0: _test2_source(x),
        kinks=(0.0,), description="-u_xx^3 + u_xx + S^3 - S = 0 on (-1, 1)",
        defaults={"J": [4, 8, 16, 32, 64], "r": [0, 1, 2, 3]},
    )


def test3() -> Problem:
    """HJB with control set {1, 2}: ``min_theta(-theta u_xx) + u_x - u + S = 0``."""
    def S(x):
        x = np.asarray(x, dtype=float)
        ax3 = np.abs(x) ** 3
        return np.where(x < 0.0, -12.0 * x ** 2, 24.0 * x ** 2) - 4.0 * ax3 + x * ax3

    return Problem(
        name="test3", kind="elliptic", domain=(-1.0, 1.0),
        F=PointwiseOperator(
            F=lambda p, q, u, x, t: np.minimum(-p, -2.0 * p) + q - u + S(x),
            dF_dp=lambda p, q, u, x, t: np.where(np.asarray(p) >= 0.0, -2.0, -1.0),
            dF_dq=_ones, dF_du=lambda *a: -_ones(*a)),
        bc=BoundaryData.constant(-1.0, 1.0), alpha_default=4.0,
        exact=lambda x, t=0.0: np.asarray(x) * np.abs(x) ** 3,
        exact_x=lambda x, t=0.0: 4.0 * np.abs(x) ** 3,
        exact_xx=lambda x, t=0.0: 12.0 * np.asarray(x) * np.abs(x),
        kinks=(0.0,), description="min over theta in {1,2} of -theta u_xx + u_x - u + S",
        defaults={"J": [4, 8, 16, 32, 64], "r": [0, 1, 2, 3]},
    )


def _test4_control(p, q, x):
    """Minimizing theta in (0, 1] of ``-theta p + theta^2 x^2 q``; 0 encodes the open-end limit."""
    p, q, x = np.broadcast_arrays(np.asarray(p, float), np.asarray(q, float), np.asarray(x, float))
    c2 = x ** 2 * q
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = np.where(c2 > 0.0, p / (2.0 * c2), np.nan)
    vertex_ok = (c2 > 0.0) & (vertex > 0.0) & (vertex <= 1.0)
    cand = np.stack([np.zeros_like(p), np.ones_like(p), np.where(vertex_ok, vertex, 1.0)])
    vals = -cand * p + cand ** 2 * c2
    return np.take_along_axis(cand, np.argmin(vals, axis=0)[None], axis=0)[0]


def test4() -> Problem:
    """HJB with control interval (0, 1] on (1.2, 4); exact solution x^2 ln x."""
    def S(x):
        x = np.asarray(x, dtype=float)
        L = LN(x)
        num = 4.0 * L ** 2 + 12.0 * L + 9.0 - 8.0 * x ** 4 * L ** 2 - 4.0 * x ** 4 * L
        return num / (4.0 * x ** 3 * (2.0 * L + 1.0))

    def F(p, q, u, x, t):
        th = _test4_control(p, q, x)
        return -th * p + th ** 2 * x ** 2 * q + u / x + S(x)

    def dp(p, q, u, x, t):
        return -_test4_control(p, q, x)

    def dq(p, q, u, x, t):
        return _test4_control(p, q, x) ** 2 * np.asarray(x) ** 2

    def du(p, q, u, x, t):
        return np.broadcast_to(1.0 / np.asarray(x, dtype=float), np.broadcast(p, q, u, x).shape)

    return Problem(
        name="test4", kind="elliptic", domain=(1.2, 4.0),
        F=PointwiseOperator(F, dF_dp=dp, dF_dq=dq, dF_du=du),
        bc=BoundaryData.constant(1.44 * np.log(1.2), 16.0 * np.log(4.0)), alpha_default=4.0,
        exact=lambda x, t=0.0: np.asarray(x) ** 2 * LN(x),
        exact_x=lambda x, t=0.0: 2.0 * np.asarray(x) * LN(x) + np.asarray(x),
        exact_xx=lambda x, t=0.0: 2.0 * LN(x) + 3.0,
        description="inf over theta in (0,1] of -theta u_xx + theta^2 x^2 u_x + u/x + S",
        defaults={"J": [4, 8, 16, 32, 64], "r": [0, 1, 2, 3]},
    )


# ---------------------------------------------------------------------------
# evolution problems  u_t + F(u_xx, u_x, u, x, t) = 0

def test5() -> Problem:
    """Product nonlinearity ``-u_xx u``; exact solution x^2/2 + t^4 + 1."""
    return Problem(
        name="test5", kind="parabolic", domain=(0.0, 1.0),
        F=PointwiseOperator(
            F=lambda p, q, u, x, t: -p * u + 0.5 * x ** 2 + t ** 4 - 4.0 * t ** 3 + 1.0,
            dF_dp=lambda p, q, u, x, t: -u * np.ones(np.shape(p)),
            dF_dq=_zeros,
            dF_du=lambda p, q, u, x, t: -p * np.ones(np.shape(u))),
        bc=BoundaryData(lambda t: t ** 4 + 1.0, lambda t: 1.5 + t ** 4),
        alpha_default=2.0,
        exact=lambda x, t=0.0: 0.5 * np.asarray(x) ** 2 + t ** 4 + 1.0,
        exact_x=lambda x, t=0.0: np.asarray(x, dtype=float),
        exact_xx=lambda x, t=0.0: np.ones_like(np.asarray(x, dtype=float)),
        exact_t=lambda x, t=0.0: 4.0 * t ** 3 * np.ones_like(np.asarray(x, dtype=float)),
        u0=lambda x: 0.5 * np.asarray(x) ** 2 + 1.0,
        description="u_t - u_xx u + x^2/2 + t^4 - 4t^3 + 1 = 0 on (0, 1)",
        defaults={"J": [4, 8, 16, 32], "r": [0, 1, 2], "T": 1.0,
                  "kappa_t": {0: 0.001, 1: 0.001, 2: 0.001}, "dt": 0.001},
    )


def _test6_source(x, t):
    e = np.exp((t + 1.0) * np.asarray(x, dtype=float))
    return e * (x - (t + 1.0) * np.log((t + 1.0) ** 2 * e + 1.0))


def test6() -> Problem:
    """Nonlinear in both derivatives: ``-u_x ln(u_xx + 1)``; exact solution exp((t+1)x)."""
    def F(p, q, u, x, t):
        return -q * np.log(p + 1.0) - _test6_source(x, t)

    def ex(x, t=0.0):
        return np.exp((t + 1.0) * np.asarray(x, dtype=float))

    return Problem(
        name="test6", kind="parabolic", domain=(0.0, 2.0),
        F=PointwiseOperator(
            F, dF_dp=lambda p, q, u, x, t: -q / (p + 1.0),
            dF_dq=lambda p, q, u, x, t: -np.log(p + 1.0) * np.ones(np.shape(q)),
            dF_du=_zeros),
        bc=BoundaryData(lambda t: 1.0, lambda t: np.exp(2.0 * (t + 1.0))),
        alpha_default=4.0,
        exact=ex,
        exact_x=lambda x, t=0.0: (t + 1.0) * ex(x, t),
        exact_xx=lambda x, t=0.0: (t + 1.0) ** 2 * ex(x, t),
        exact_t=lambda x, t=0.0: np.asarray(x) * ex(x, t),
        u0=lambda x: np.exp(np.asarray(x, dtype=float)),
        description="u_t - u_x ln(u_xx + 1) - S = 0 on (0, 2)",
        defaults={"J": [4, 8, 16, 32], "r": [0, 1, 2, 3], "T": 0.5,
                  "kappa_t": {0: 0.005, 1: 0.001, 2: 0.0005, 3: 0.0001}, "dt": 0.005},
    )


def _test7_c(x, t):
    """1 where the optimal coefficient is A_1 (cos t sin x >= 0 on [0, pi]), else 1/2."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    first = (t >= 0.0) & (t <= np.pi / 2) & (x > 0.0) & (x <= np.pi)
    second = (t > np.pi / 2) & (t <= np.pi) & (x > np.pi) & (x < 2.0 * np.pi)
    return np.where(first | second, 1.0, 0.5)


def test7() -> Problem:
    """HJB with two diffusion coefficients {1, 1/2}; exact solution cos t sin x."""
    def F(p, q, u, x, t):
        return -np.minimum(p, 0.5 * p) - _test7_c(x, t) * np.cos(t) * np.sin(x) \
            + np.sin(t) * np.sin(x)

    return Problem(
        name="test7", kind="parabolic", domain=(0.0, 2.0 * np.pi),
        F=PointwiseOperator(
            F, dF_dp=lambda p, q, u, x, t: np.where(np.asarray(p) < 0.0, -1.0, -0.5)
            * np.ones(np.broadcast(p, x).shape),
            dF_dq=_zeros, dF_du=_zeros),
        bc=BoundaryData.constant(0.0, 0.0), alpha_default=2.0,
        exact=lambda x, t=0.0: np.cos(t) * np.sin(x),
        exact_x=lambda x, t=0.0: np.cos(t) * np.cos(x),
        exact_xx=lambda x, t=0.0: -np.cos(t) * np.sin(x),
        exact_t=lambda x, t=0.0: -np.sin(t) * np.sin(x),
        u0=lambda x: np.sin(x),
        description="u_t - min_theta{A_theta u_xx + c cos t sin x - sin t sin x} = 0 on (0, 2pi)",
        defaults={"J": [4, 8, 16, 32], "r": [0, 1, 2, 3], "T": 3.10,
                  "kappa_t": {0: 0.05, 1: 0.005, 2: 0.001, 3: 0.0005}, "dt": 0.031},
    )


def test8() -> Problem:
    """Bang-bang control ``-inf_{|theta|<=1}{|x-1| u_xx + theta u_x}``; exact |x-1|^3 e^{-t}."""
    def F(p, q, u, x, t):
        d = np.abs(np.asarray(x) - 1.0)
        return -(d * p - np.abs(q)) + d ** 2 * (d + 3.0) * np.exp(-t)

    def ex(x, t=0.0):
        return np.abs(np.asarray(x, dtype=float) - 1.0) ** 3 * np.exp(-t)

    return Problem(
        name="test8", kind="parabolic", domain=(0.0, 3.0),
        F=PointwiseOperator(
            F, dF_dp=lambda p, q, u, x, t: -np.abs(np.asarray(x) - 1.0) * np.ones(np.shape(p)),
            dF_dq=lambda p, q, u, x, t: np.sign(q) * np.ones(np.shape(p)),
            dF_du=_zeros),
        bc=BoundaryData(lambda t: np.exp(-t), lambda t: 8.0 * np.exp(-t)),
        alpha_default=2.0,
        exact=ex,
        exact_x=lambda x, t=0.0: 3.0 * np.abs(np.asarray(x) - 1.0) * (np.asarray(x) - 1.0) * np.exp(-t),
        exact_xx=lambda x, t=0.0: 6.0 * np.abs(np.asarray(x) - 1.0) * np.exp(-t),
        exact_t=lambda x, t=0.0: -ex(x, t),
        u0=lambda x: np.abs(np.asarray(x, dtype=float) - 1.0) ** 3,
        kinks=(1.0,),
        description="u_t - inf_theta{|x-1| u_xx + theta u_x} + source = 0 on (0, 3)",
        defaults={"J": [4, 8, 16, 32], "r": [0, 1, 2, 3], "T": 1.0,
                  "kappa_t": {0: 0.05, 1: 0.005, 2: 0.001, 3: 0.0005}, "dt": 0.001},
    )


REGISTRY = {f.__name__: f for f in (test1, test2, test3, test4, test5, test6, test7, test8)}


def get_problem(name: str) -> Problem:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(REGISTRY)}") from None


# ---------------------------------------------------------------------------
# fixtures for the solution-selection experiments on test1

def mu(x):
    """C^1 piecewise quadratic satisfying |u''| = 1 a.e. with the test1 boundary data."""
    x = np.asarray(x, dtype=float)
    return np.where(x < 0.5, 0.5 * x ** 2 + 0.25 * x, -0.5 * x ** 2 + 1.25 * x - 0.25)


def u_plus(x):
    return 0.5 * np.asarray(x, dtype=float) ** 2


def u_minus(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x ** 2 + x


def u_bar(x):
    return 0.5 * np.asarray(x, dtype=float)


def selection_fixtures() -> dict:
    return {"mu": mu, "u_plus": u_plus, "u_minus": u_minus, "u_bar": u_bar}
