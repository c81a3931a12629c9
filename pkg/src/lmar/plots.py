"""SVG report figures.

Figures are built on ``matplotlib.figure.Figure`` directly (no pyplot
state), with text converted to paths and a fixed hash salt so the SVG is
self-contained and reproducible.
"""

from __future__ import annotations

import io
import re

import numpy as np
from matplotlib import rc_context
from matplotlib.figure import Figure
from scipy.special import ndtr

_RC = {
    "svg.fonttype": "path",
    "svg.hashsalt": "lmar",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


# dropping these keys removes the RDF block (and its dcmitype URL) entirely
_NO_METADATA = {"Date": None, "Type": None, "Format": None, "Creator": None}
_DOCTYPE = re.compile(r"<!DOCTYPE[^>]*>\s*")


def _save(fig, path):
    buf = io.StringIO()
    with rc_context(_RC):
        fig.savefig(buf, format="svg", metadata=_NO_METADATA)
    # the DOCTYPE points at an external DTD; the SVG must stand alone
    text = _DOCTYPE.sub("", buf.getvalue(), count=1)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def ecdf_vs_normal(samples, path, title="Normalized error"):
    """Empirical CDF of ``samples`` against the standard normal CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    m = x.size
    with rc_context(_RC):
        fig = Figure(figsize=(5.5, 4.0))
        ax = fig.add_subplot()
        grid = np.linspace(min(-4.0, x[0]), max(4.0, x[-1]), 400)
        ax.plot(grid, ndtr(grid), color="k", lw=1.2, label=r"$\Phi$")
        ax.step(x, np.arange(1, m + 1) / m, where="post", color="C0", lw=1.0, label=f"ECDF (m={m})")
        ax.set_xlabel("z")
        ax.set_ylabel("P(G <= z)")
        ax.set_title(title)
        ax.legend(loc="upper left")
        fig.tight_layout()
    return _save(fig, path)


def rate_plot(ns, d_n, floor, path, phi=None, dtv=None):
    """``d_n`` against ``n`` on log-log axes with theory overlays.

    ``phi`` is anchored at the first ``d_n`` since its constant is unknown.
    """
    ns = np.asarray(ns, dtype=float)
    d_n = np.asarray(d_n, dtype=float)
    with rc_context(_RC):
        fig = Figure(figsize=(5.5, 4.0))
        ax = fig.add_subplot()
        ax.loglog(ns, d_n, "o-", color="C0", label=r"empirical $d_n$")
        ax.loglog(ns, 3.0 * np.asarray(floor), ":", color="0.5", label="3 x MC floor")
        if phi is not None:
            phi = np.asarray(phi, dtype=float)
            ax.loglog(ns, phi * d_n[0] / phi[0], "--", color="C1", label=r"$\varphi(n)$ (anchored)")
        if dtv is not None:
            ax.loglog(ns, dtv, "-.", color="C2", label=r"$d_{TV}$ bound")
        ax.set_xlabel("n")
        ax.set_ylabel("sup distance")
        ax.legend(loc="best")
        fig.tight_layout()
    return _save(fig, path)


def asclt_plot(z_grid, averages, path):
    """Per-replicate log averages at each ``z`` with the normal CDF."""
    z = np.asarray(z_grid, dtype=float)
    avg = np.asarray(averages, dtype=float)
    with rc_context(_RC):
        fig = Figure(figsize=(5.5, 4.0))
        ax = fig.add_subplot()
        zz = np.linspace(min(-3.0, z.min()), max(3.0, z.max()), 300)
        ax.plot(zz, ndtr(zz), color="k", lw=1.2, label=r"$\Phi(z)$")
        for row in avg:
            ax.plot(z, row, ".", color="C0", alpha=0.4)
        ax.plot(z, avg.mean(axis=0), "s-", color="C3", label="mean log average")
        ax.set_xlabel("z")
        ax.set_ylabel("log average")
        ax.legend(loc="upper left")
        fig.tight_layout()
    return _save(fig, path)


def error_plot(ns, rmse, mae, path):
    with rc_context(_RC):
        fig = Figure(figsize=(5.5, 4.0))
        ax = fig.add_subplot()
        ax.loglog(ns, rmse, "o-", label="RMSE")
        ax.loglog(ns, mae, "s--", label="mean |error|")
        ax.set_xlabel("n")
        ax.set_ylabel("error")
        ax.legend(loc="best")
        fig.tight_layout()
    return _save(fig, path)


def theory_plot(ns, dtv, be_rate, path):
    with rc_context(_RC):
        fig = Figure(figsize=(5.5, 4.0))
        ax = fig.add_subplot()
        ax.loglog(ns, dtv, "o-", label=r"$d_{TV}$ bound")
        if be_rate is not None:
            ax.loglog(ns, be_rate, "--", label=r"$\varphi(n)$")
        ax.set_xlabel("n")
        ax.legend(loc="best")
        fig.tight_layout()
    return _save(fig, path)
