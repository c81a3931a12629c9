"""AR(1) paths driven by a stationary Gaussian noise.

``X_t = theta X_{t-1} + xi_t`` with ``X_0 = 0`` is the observation model.
Its stationary solution ``Y_t = sum_j theta^j xi_{t-j}`` is sampled
exactly through the filtered covariance ``R(k)`` rather than by truncating
the moving-average sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .covariance import CovarianceModel
from .errors import DomainError
from .gaussian_sim import (
    PathKind,
    SamplePath,
    plan_embedding,
    sample_stationary,
    standard_normals,
)

__all__ = [
    "Ar1Model",
    "ar1_filter",
    "generate_x_path",
    "generate_y_path",
    "coupled_paths",
    "decompose_check",
]


@dataclass(frozen=True)
class Ar1Model:
    theta: float
    noise: CovarianceModel

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise DomainError(f"theta must lie strictly inside (0, 1), got {self.theta!r}")

    @property
    def tag(self):
        return f"ar1(theta={self.theta:g}, {self.noise.name})"


def ar1_filter(xi, theta, axis=-1):
    """Run ``X_t = theta X_{t-1} + xi_t`` from ``X_0 = 0`` along ``axis``."""
    return lfilter([1.0], [1.0, -theta], np.asarray(xi, dtype=float), axis=axis)


def generate_x_path(model, n, seed, noise=None):
    """Simulate ``X_1..X_n``.

    The noise is drawn exactly by circulant embedding unless an explicit
    ``noise`` array is injected (used for hand-checkable cases).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if noise is None:
        if n == 1:
            xi = standard_normals(seed, 1)
        else:
            plan = plan_embedding(model.noise, n)
            xi = sample_stationary(plan, seed).values
    else:
        xi = np.asarray(noise, dtype=float)
        if xi.shape != (n,):
            raise ValueError(f"injected noise must have shape ({n},)")
    return SamplePath(ar1_filter(xi, model.theta), int(seed), model.tag, PathKind.AR1)


def _y_plan(model, n, ctx=None):
    from .moments import MomentContext

    if ctx is None:
        ctx = MomentContext(model)
    m = 1 << (2 * (n - 1) - 1).bit_length()
    return plan_embedding(ctx.r_table(m // 2), n, power_of_two=True, tag=model.tag)


def generate_y_path(model, n, seed, ctx=None):
    """Simulate ``Y_1..Y_n`` of the stationary solution exactly."""
    if n < 2:
        raise ValueError("n must be >= 2")
    plan = _y_plan(model, n, ctx)
    return sample_stationary(plan, seed, PathKind.STATIONARY)


def coupled_paths(model, n, seed, ctx=None):
    """Draw ``(x, y, xi)`` built from one noise stream.

    ``y`` holds ``Y_0..Y_n``; the noise is recovered as
    ``xi_t = Y_t - theta Y_{t-1}`` and ``x`` is the AR(1) recursion
    started at ``X_0 = 0`` on that noise.
    """
    y = generate_y_path(model, n + 1, seed, ctx)
    yv = y.values
    xi = yv[1:] - model.theta * yv[:-1]
    x = generate_x_path(model, n, seed, noise=xi)
    y0 = SamplePath(yv, int(seed), model.tag, PathKind.STATIONARY, start=0)
    return x, y0, SamplePath(xi, int(seed), model.noise.name, PathKind.NOISE)


def decompose_check(x, y, theta):
    """Return ``max_t |X_t - (Y_t - theta^t Y_0)|`` over ``t = 1..n``.

    ``y`` must start at index 0 and be one longer than ``x``.
    """
    if y.start != 0:
        raise ValueError("y must include the index-0 value")
    if len(y) != len(x) + 1:
        raise ValueError(f"length mismatch: len(x)={len(x)}, len(y)={len(y)}")
    t = np.arange(1, len(x) + 1)
    yv = y.values
    return float(np.max(np.abs(x.values - (yv[1:] - theta ** t * yv[0]))))
