"""Matplotlib figures written straight to files (non-interactive backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.ticker import NullFormatter  # noqa: E402

plt.rcParams.update({
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "figure.figsize": (6.4, 4.2),
})


def plot_convergence(report, path) -> None:
    """Log-log error against h, one line per degree and norm, with reference slopes."""
    fig, axes = plt.subplots(1, 2, sharey=True, figsize=(9.0, 4.0))
    for ax, norm, label in zip(axes, ("l2", "linf"), ("$L^2$", "$L^\\infty$")):
        for r in report.config.r:
            rows = [row for row in report.for_r(r) if np.isfinite(getattr(row, norm))]
            if not rows:
                continue
            h = np.array([row.h for row in rows])
            e = np.array([getattr(row, norm) for row in rows])
            line, = ax.loglog(h, e, "o-", label=f"r = {r}")
            if len(h) > 1 and np.all(e > 1e-11):  # no slope guide at roundoff level
                ref = e[-1] * (h / h[-1]) ** (r + 1)
                ax.loglog(h, ref, ":", color=line.get_color(), lw=1)
        hs = sorted({row.h for row in report.rows})
        ax.xaxis.set_minor_formatter(NullFormatter())
        ax.set_xticks(hs, [f"{h:.3g}" for h in hs])
        ax.set_xlabel("h")
        ax.set_title(f"{label} error")
    axes[0].set_ylabel("error")
    axes[0].legend(loc="best")
    fig.suptitle(report.config.problem)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_solution(x, u_h, exact=None, path=None, title=""):
    """Piecewise samples of ``u_h`` (one polyline per cell) against the exact solution."""
    fig, ax = plt.subplots()
    x = np.asarray(x)
    u_h = np.asarray(u_h)
    if exact is not None:
        xs = np.linspace(x.min(), x.max(), 400)
        ax.plot(xs, exact(xs), "k-", lw=1, label="exact")
    ax.plot(x, u_h, ".", ms=3, label="$u_h$")
    ax.set_xlabel("x")
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_snapshots(history, path, title=""):
    from .study import sample_solution

    fig, ax = plt.subplots()
    cmap = plt.get_cmap("viridis")
    n = max(len(history) - 1, 1)
    for k, (t, u) in enumerate(history):
        x, v = sample_solution(u)
        ax.plot(x, v, color=cmap(k / n), lw=1, label=f"t = {t:.3g}" if k in (0, len(history) - 1) else None)
    ax.set_xlabel("x")
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
