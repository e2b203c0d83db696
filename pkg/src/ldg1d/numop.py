"""Pointwise fully nonlinear operators and Lax-Friedrichs-like numerical operators.

A :class:`PointwiseOperator` wraps ``F(p, q, u, x, t)`` where ``p`` and ``q``
stand for ``u_xx`` and ``u_x``.  The numerical operator replaces the single
second and first derivatives by their one-sided approximations,

    Fhat(p1, p2, p3, p4, q1, q2, u, x, t)
        = F((p2 + p3) / 2, (q1 + q2) / 2, u, x, t) + alpha * (p1 - p2 - p3 + p4),

and the last term is the numerical moment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

FD_REL_STEP = 1e-6


class OperatorEvaluationError(FloatingPointError):
    """Raised when ``F`` returns non-finite values."""


@dataclass(frozen=True)
class PointwiseOperator:
    """``F(p, q, u, x, t)`` with optional analytic partials (all vectorized)."""

    F: Callable
    dF_dp: Optional[Callable] = None
    dF_dq: Optional[Callable] = None
    dF_du: Optional[Callable] = None
    monotone_bound: Optional[float] = None

    def __call__(self, p, q, u, x, t=0.0):
        return self.F(p, q, u, x, t)

    @property
    def has_partials(self) -> bool:
        return None not in (self.dF_dp, self.dF_dq, self.dF_du)

    def partials(self, p, q, u, x, t=0.0, analytic: bool = True):
        """``(dF/dp, dF/dq, dF/du)``; central differences when no analytic partials."""
        if analytic and self.has_partials:
            shape = np.broadcast(p, q, u, x).shape
            return tuple(np.broadcast_to(np.asarray(g(p, q, u, x, t), dtype=float), shape)
                         for g in (self.dF_dp, self.dF_dq, self.dF_du))
        args = [np.asarray(a, dtype=float) for a in (p, q, u)]
        out = []
        for i in range(3):
            step = FD_REL_STEP * (1.0 + np.abs(args[i]))
            hi = list(args)
            lo = list(args)
            hi[i] = args[i] + step
            lo[i] = args[i] - step
            out.append((self.F(*hi, x, t) - self.F(*lo, x, t)) / (2.0 * step))
        return tuple(out)


def check_partials(op: PointwiseOperator, samples, rtol: float = 1e-5) -> list:
    """Compare analytic partials against central differences; returns failing samples."""
    failures = []
    for (p, q, u, x, t) in samples:
        an = op.partials(p, q, u, x, t, analytic=True)
        fd = op.partials(p, q, u, x, t, analytic=False)
        for name, a, d in zip(("p", "q", "u"), an, fd):
            a, d = float(a), float(d)
            if abs(a - d) > rtol * (1.0 + abs(d)):
                failures.append({"sample": (p, q, u, x, t), "arg": name,
                                 "analytic": a, "finite_difference": d})
    return failures


@dataclass(frozen=True)
class NumericalOperator:
    base: PointwiseOperator
    alpha: float

    def __call__(self, p1, p2, p3, p4, q1, q2, u, x, t=0.0):
        return evaluate(self, p1, p2, p3, p4, q1, q2, u, x, t)

    def partials(self, p1, p2, p3, p4, q1, q2, u, x, t=0.0, analytic: bool = True):
        """Derivatives w.r.t. ``(p1, p2, p3, p4, q1, q2, u)``."""
        s = 0.5 * (p2 + p3)
        qbar = 0.5 * (q1 + q2)
        Fp, Fq, Fu = self.base.partials(s, qbar, u, x, t, analytic=analytic)
        a = np.full(np.shape(Fp), float(self.alpha))
        return (a, 0.5 * Fp - a, 0.5 * Fp - a, a, 0.5 * Fq, 0.5 * Fq, Fu)


def evaluate(op: NumericalOperator, p1, p2, p3, p4, q1, q2, u, x, t=0.0):
    """Lax-Friedrichs-like numerical operator with moment ``alpha (p1 - p2 - p3 + p4)``."""
    with np.errstate(all="ignore"):
        val = op.base.F(0.5 * (p2 + p3), 0.5 * (q1 + q2), u, x, t)
        val = val + op.alpha * (p1 - p2 - p3 + p4)
    bad = ~np.isfinite(val)
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))[0]
        xs = np.broadcast_to(x, np.shape(val))
        where = np.atleast_1d(xs)[tuple(idx)] if np.ndim(val) else x
        raise OperatorEvaluationError(
            f"numerical operator is not finite at x={float(where):.6g}, t={float(t):.6g} "
            f"(index {tuple(int(i) for i in idx)})")
    return val


@dataclass
class CheckReport:
    name: str
    n_samples: int
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __str__(self):
        status = "pass" if self.passed else f"FAIL ({len(self.violations)} violations)"
        return f"{self.name}: {status} over {self.n_samples} samples"


def check_consistency(op: NumericalOperator, samples: Iterable, rtol: float = 1e-12) -> CheckReport:
    """On the diagonal ``p_i = p, q_i = q`` the numerical operator must equal ``F``."""
    samples = np.asarray(list(samples), dtype=float).reshape(-1, 5)
    p, q, u, x, t = samples.T
    fhat = np.array([op(pi, pi, pi, pi, qi, qi, ui, xi, ti)
                     for pi, qi, ui, xi, ti in samples], dtype=float)
    F = np.array([op.base(pi, qi, ui, xi, ti) for pi, qi, ui, xi, ti in samples], dtype=float)
    err = np.abs(fhat - F)
    report = CheckReport("consistency", len(samples))
    for i in np.flatnonzero(err > rtol * (1.0 + np.abs(F))):
        report.violations.append({"sample": tuple(samples[i]), "error": float(err[i])})
    return report


def check_gmonotonicity(op: NumericalOperator, samples: Iterable,
                        perturbation: float = 1e-4, tol: float = 1e-8) -> CheckReport:
    """Central differences of ``Fhat`` must be >= 0 in p1, p4 and <= 0 in p2, p3.

    ``samples`` are ``(p, q, u, x, t)`` or full ``(p1, p2, p3, p4, q1, q2, u, x, t)``
    tuples.  The step is ``perturbation * (1 + |p_k|)``.
    """
    report = CheckReport("g-monotonicity", 0)
    signs = (+1, -1, -1, +1)
    for s in samples:
        s = tuple(float(v) for v in s)
        if len(s) == 5:
            p, q, u, x, t = s
            args = [p, p, p, p, q, q, u, x, t]
        elif len(s) == 9:
            args = list(s)
        else:
            raise ValueError(f"sample must have 5 or 9 entries, got {len(s)}")
        report.n_samples += 1
        for k, sign in enumerate(signs):
            step = perturbation * (1.0 + abs(args[k]))
            hi, lo = list(args), list(args)
            hi[k] += step
            lo[k] -= step
            d = (float(op(*hi)) - float(op(*lo))) / (2.0 * step)
            if sign * d < -tol:
                report.violations.append({"sample": tuple(args), "arg": f"p{k + 1}",
                                          "derivative": d})
    return report
