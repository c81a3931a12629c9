"""Limit-theorem quantities for the second-moment estimator.

Covers the Breuer-Major statistic ``V_n``, the normalized error ``G_n``,
the Berry-Esseen rate ``phi(n)``, the fourth-moment total-variation bound
and the logarithmic (almost sure CLT) average along one trajectory.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import AboveRange, BelowRange, DomainError, UnsupportedRegime

__all__ = [
    "Branch",
    "RateCurve",
    "RunningEstimates",
    "breuer_major_vn",
    "normalized_error",
    "berry_esseen_rate",
    "dtv_fourth_moment_bound",
    "dtv_bound_curve",
    "asclt_log_average",
    "running_estimates",
    "default_grid",
]


class Branch(enum.Enum):
    SUB58 = "sub58"
    SUPER58 = "super58"


@dataclass(frozen=True)
class RateCurve:
    """Piecewise Berry-Esseen rate ``phi(n) = n^-exponent``."""

    H: float
    epsilon: float

    def __post_init__(self):
        if not (0.5 < self.H < 0.75):
            raise UnsupportedRegime(f"Berry-Esseen rate needs H in (1/2, 3/4), got {self.H!r}")
        if not (0.0 < self.epsilon <= 0.1):
            raise DomainError(f"epsilon must lie in (0, 0.1], got {self.epsilon!r}")

    @property
    def branch(self):
        return Branch.SUB58 if self.H < 0.625 else Branch.SUPER58

    @property
    def exponent(self):
        if self.branch is Branch.SUB58:
            return 0.5 - self.epsilon
        return 3.0 - 4.0 * self.H - self.epsilon

    def __call__(self, n):
        return np.asarray(n, dtype=float) ** -self.exponent


def berry_esseen_rate(H, n, epsilon):
    if n < 2:
        raise DomainError("n must be >= 2")
    return float(RateCurve(H, epsilon)(n))


def breuer_major_vn(y, f_theta_value):
    """``n^-1/2 sum_t (Y_t^2 - E Y_t^2)``."""
    v = np.asarray(getattr(y, "values", y), dtype=float)
    if v.size == 0:
        raise DomainError("empty path")
    return float(np.sum(v * v - f_theta_value) / math.sqrt(v.size))


def normalized_error(theta_hat, theta, n, ctx):
    """``f'(theta) sqrt(n) (theta_hat - theta) / sigma_H``; vectorizes over ``theta_hat``."""
    scale = ctx.f_prime(theta) * np.sqrt(n) / math.sqrt(ctx.sigma_h2())
    return scale * (np.asarray(theta_hat, dtype=float) - theta)


def dtv_bound_curve(ctx, ns):
    """Fourth-moment bound on ``d_TV(V_n / v_n, Z)`` for each ``n`` in ``ns``.

    The bound is ``4 sqrt(2) / (v_n^2 sqrt(n)) (sum_{|k|<n} |R(k)|^(4/3))^(3/2)``.
    """
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size == 0 or ns.min() < 1:
        raise DomainError("n must be >= 1")
    nmax = int(ns.max())
    r = np.abs(ctx.r_table(max(nmax - 1, 0))[:nmax])
    r2 = r * r
    k = np.arange(nmax, dtype=float)
    # cumulative one-sided sums over k = 1..n-1, index n-1
    c43 = np.concatenate([[0.0], np.cumsum(r[1:] ** (4.0 / 3.0))])
    c2 = np.concatenate([[0.0], np.cumsum(r2[1:])])
    ck2 = np.concatenate([[0.0], np.cumsum(k[1:] * r2[1:])])
    idx = ns - 1
    nf = ns.astype(float)
    s43 = r[0] ** (4.0 / 3.0) + 2.0 * c43[idx]
    vn2 = 2.0 * (r2[0] + 2.0 * c2[idx] - 2.0 * ck2[idx] / nf)
    return 4.0 * math.sqrt(2.0) / (vn2 * np.sqrt(nf)) * s43 ** 1.5


def dtv_fourth_moment_bound(ctx, n):
    return float(dtv_bound_curve(ctx, [n])[0])


def asclt_log_average(g, z, retained=None):
    """``(log n)^-1 sum_{k=1}^n k^-1 1{g_k <= z}``.

    Entries flagged False in ``retained`` (or NaN in ``g``) are censored:
    they leave the numerator and their weight ``1/k`` is removed from the
    normalizer, which stays ``log n`` when nothing is censored.
    """
    g = np.asarray(g, dtype=float)
    n = g.size
    if n == 0:
        raise DomainError("empty sequence")
    if n < 2:
        raise DomainError("log average needs n >= 2")
    keep = ~np.isnan(g)
    if retained is not None:
        keep &= np.asarray(retained, dtype=bool)
    w = 1.0 / np.arange(1, n + 1, dtype=float)
    with np.errstate(invalid="ignore"):
        hit = keep & (g <= z)
    denom = math.log(n) - float(np.sum(w[~keep]))
    if denom <= 0:
        return math.nan
    return float(np.sum(w[hit])) / denom


def default_grid(n, linear_until=512):
    """All ``k <= linear_until`` followed by powers of two, ending at ``n``."""
    lin = np.arange(1, min(n, linear_until) + 1)
    dy = 2 ** np.arange(int(math.log2(linear_until)) + 1, int(math.log2(max(n, 1))) + 1)
    grid = np.unique(np.concatenate([lin, dy[dy <= n], [n]]))
    return grid.astype(np.int64)


@dataclass(frozen=True, eq=False)
class RunningEstimates:
    grid: np.ndarray
    theta_hat: np.ndarray
    below: np.ndarray
    above: np.ndarray

    @property
    def censored(self):
        return self.below | self.above


def running_estimates(ctx, x, grid=None):
    """Estimator on every prefix ``X_1..X_k`` for ``k`` in ``grid``.

    Prefix second moments come from one cumulative sum; each inversion is
    warm-started at the previous retained root.  Out-of-range prefixes are
    flagged (``theta_hat`` is NaN there) and never abort the scan.
    """
    values = np.asarray(getattr(x, "values", x), dtype=float)
    n = values.size
    grid = default_grid(n) if grid is None else np.asarray(grid, dtype=np.int64)
    if grid.size == 0 or grid[0] < 1 or grid[-1] > n or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing within [1, n]")
    moments = np.cumsum(values * values)[grid - 1] / grid
    est = np.full(grid.size, np.nan)
    below = np.zeros(grid.size, dtype=bool)
    above = np.zeros(grid.size, dtype=bool)
    guess = None
    for i, m in enumerate(moments):
        try:
            guess = est[i] = ctx.f_inverse(float(m), guess)
        except BelowRange:
            below[i] = True
        except AboveRange:
            above[i] = True
    return RunningEstimates(grid, est, below, above)
