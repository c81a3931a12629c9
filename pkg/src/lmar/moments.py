"""Second-moment function of the stationary AR(1) solution and its relatives.

With ``rho`` the noise autocovariance and ``0 < theta < 1``::

    f(theta) = E Y_t^2    = (1 - theta^2)^-1 (1 + 2 sum_{k>=1} theta^k rho(k))
    R(k)     = E Y_0 Y_k  = (1 - theta^2)^-1 sum_{m in Z} theta^|m| rho(k + m)

Both are diagonal re-indexings of the double sums
``sum_{i,j>=0} theta^(i+j) rho(k - i + j)`` and cost O(M) with
``M = ceil(log(tol) / log(theta))`` terms.  The estimator inverts ``f`` at
the sample mean of ``X_t^2``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .errors import (
    AboveRange,
    BelowRange,
    DomainError,
    ModelNotMonotone,
    TruncationInsufficient,
    UnsupportedRegime,
)

__all__ = [
    "TruncationPolicy",
    "MomentContext",
    "THETA_LO",
    "THETA_HI",
    "f_theta",
    "f_prime",
    "r_cov",
    "sigma_h2",
    "v_n2",
    "f_inverse",
    "estimate_theta",
    "check_regime",
]

THETA_LO = 1e-6
THETA_HI = 1.0 - 1e-6
MONOTONE_GRID = np.linspace(0.01, 0.99, 99)
TAIL_RTOL = 1e-4
_INVERSE_MAXIT = 200


@dataclass(frozen=True)
class TruncationPolicy:
    """Cutoffs for the infinite series.

    theta_tail_tol : series in theta stop once ``theta^M < theta_tail_tol``.
    rho_cutoff : cap on every lag sum, including the sigma_H^2 sum.
    sigma_tail_check : refuse sigma_H^2 when the power-law tail estimate
        is unstable at the cutoff.
    """

    theta_tail_tol: float = 1e-14
    rho_cutoff: int = 10 ** 6
    sigma_tail_check: bool = True

    def __post_init__(self):
        if not (0.0 < self.theta_tail_tol <= 1e-6):
            raise DomainError("theta_tail_tol must lie in (0, 1e-6]")
        if self.rho_cutoff < 1000:
            raise DomainError("rho_cutoff must be >= 1000")

    def terms(self, theta):
        m = math.ceil(math.log(self.theta_tail_tol) / math.log(theta))
        return max(1, min(m, self.rho_cutoff))


def check_regime(noise):
    """Raise ``UnsupportedRegime`` when the noise has H >= 3/4."""
    if noise.hurst is not None and noise.hurst >= 0.75:
        raise UnsupportedRegime(
            f"sigma_H^2 is infinite for H = {noise.hurst:g} >= 3/4; that regime is not covered"
        )


class MomentContext:
    """Moment quantities of one ``Ar1Model`` under a truncation policy.

    Scalar quantities at the model's theta are computed on construction.
    Lag tables grow on demand behind a lock and are never mutated once
    published, so a context can be shared between threads.
    """

    def __init__(self, model, policy=None, horizon=0):
        self.model = model
        self.policy = policy or TruncationPolicy()
        self._lock = threading.RLock()
        self._rho = model.noise.table(max(1024, self.policy.terms(MONOTONE_GRID[-1]) + 1))
        self._r = None
        self._range = None
        self._sigma = None

        grid_f = np.array([self._series(t)[0] for t in MONOTONE_GRID])
        self.monotone = bool(np.all(np.diff(grid_f) > 0))
        self.f_value, self.f_prime_value = self._series(model.theta)
        if horizon:
            self.r_table(horizon)

    @property
    def theta(self):
        return self.model.theta

    # lag tables -----------------------------------------------------------

    def rho_table(self, K):
        """``rho(0..K)``, extended and cached as needed."""
        rho = self._rho
        if rho.size <= K:
            with self._lock:
                if self._rho.size <= K:
                    self._rho = self.model.noise.table(max(K, 2 * self._rho.size))
                rho = self._rho
        return rho[: K + 1]

    def r_table(self, K):
        """``R(0..K)`` for the context's theta."""
        r = self._r
        if r is None or r.size <= K:
            with self._lock:
                if self._r is None or self._r.size <= K:
                    self._r = self._compute_r(K)
                r = self._r
        return r[: K + 1]

    def _compute_r(self, K):
        theta = self.theta
        M = self.policy.terms(theta)
        rho = self.rho_table(K + M)
        # rho(-M .. K+M) convolved with theta^|m|, m = -M..M
        ext = np.concatenate([rho[M:0:-1], rho])
        kernel = theta ** np.abs(np.arange(-M, M + 1, dtype=float))
        r = np.convolve(ext, kernel, mode="valid") / (1.0 - theta * theta)
        r.setflags(write=False)
        return r

    # f and its derivative ---------------------------------------------------

    def _series(self, theta):
        M = self.policy.terms(theta)
        rho = self.rho_table(M)[1:]
        k = np.arange(1, M + 1, dtype=float)
        p = theta ** k
        s0 = float(np.dot(p, rho))
        s1 = float(np.dot(k * p, rho)) / theta
        inv = 1.0 / (1.0 - theta * theta)
        f = inv * (1.0 + 2.0 * s0)
        fp = 2.0 * theta * inv * inv * (1.0 + 2.0 * s0) + 2.0 * inv * s1
        return f, fp

    def f(self, theta=None):
        if theta is None:
            return self.f_value
        _check_theta(theta)
        return self._series(theta)[0]

    def f_prime(self, theta=None):
        if theta is None:
            return self.f_prime_value
        _check_theta(theta)
        return self._series(theta)[1]

    def r_cov(self, k):
        k = abs(int(k))
        return float(self.r_table(k)[k])

    # asymptotic variance ------------------------------------------------------

    def sigma_h2(self):
        """``2 sum_k R(k)^2`` with a power-law tail beyond the cutoff.

        For long-memory noise ``R(k) ~ c k^(2H-2)``; the tail
        ``sum_{k>K} R(k)^2`` is extrapolated with a Hurwitz zeta using
        ``c`` fitted at the cutoff.  When ``sigma_tail_check`` is set the
        fit is repeated at half the cutoff and the two tail estimates must
        agree to ``1e-4`` of the total.
        """
        check_regime(self.model.noise)
        if self._sigma is not None:
            return self._sigma
        K = self.policy.rho_cutoff
        r = self.r_table(K)
        head = r[0] ** 2 + 2.0 * float(np.sum(r[1:] ** 2))
        H = self.model.noise.hurst
        tail = 0.0
        if H is not None:
            s = 4.0 - 4.0 * H
            tail = self._tail(r, K, H, s)
            if self.policy.sigma_tail_check:
                K2 = K // 2
                # two estimates of sum_{k > K/2} R(k)^2
                summed = float(np.sum(r[K2 + 1 :] ** 2)) + tail
                fitted = self._tail(r, K2, H, s)
                if abs(summed - fitted) > TAIL_RTOL * (head + 2.0 * tail):
                    raise TruncationInsufficient(
                        f"R(k)^2 tail not in its power-law regime at cutoff {K}: "
                        f"estimates {summed:.6g} vs {fitted:.6g}"
                    )
        self._sigma = 2.0 * (head + 2.0 * tail)
        return self._sigma

    @staticmethod
    def _tail(r, K, H, s):
        c = r[K] * K ** (2.0 - 2.0 * H)
        return c * c * float(zeta(s, K + 1))

    def v_n2(self, n):
        """``E V_n^2 = 2 sum_{|k|<n} (1 - |k|/n) R(k)^2``."""
        if n < 1:
            raise DomainError("n must be >= 1")
        r = self.r_table(n - 1)
        k = np.arange(1, n, dtype=float)
        return 2.0 * (r[0] ** 2 + 2.0 * float(np.sum((1.0 - k / n) * r[1:] ** 2)))

    # inversion -----------------------------------------------------------------

    def f_range(self):
        if self._range is None:
            self._range = (self._series(THETA_LO)[0], self._series(THETA_HI)[0])
        return self._range

    def f_inverse(self, y, guess=None):
        """Solve ``f(theta) = y`` on ``(THETA_LO, THETA_HI)``.

        Safeguarded Newton: the bracket is shrunk on every evaluation and a
        bisection step replaces any Newton step that leaves it or fails to
        halve the residual.  ``guess`` warm-starts the iteration.
        """
        if not self.monotone:
            raise ModelNotMonotone(f"f is not strictly increasing for {self.model.noise.name}")
        lo_val, hi_val = self.f_range()
        if not y > lo_val:
            raise BelowRange(f"second moment {y:.6g} <= f({THETA_LO:g}) = {lo_val:.6g}")
        if not y < hi_val:
            raise AboveRange(f"second moment {y:.6g} >= f({THETA_HI:g}) = {hi_val:.6g}")
        tol = 1e-12 * max(1.0, y)
        a, b = THETA_LO, THETA_HI
        x = guess if guess is not None and a < guess < b else _secant_start(a, b, lo_val, hi_val, y)
        prev = math.inf
        for _ in range(_INVERSE_MAXIT):
            fx, dfx = self._series(x)
            g = fx - y
            if abs(g) <= tol:
                return x
            if g < 0:
                a = x
            else:
                b = x
            step = g / dfx if dfx > 0 else math.inf
            xn = x - step
            if not (a < xn < b) or abs(g) > 0.5 * prev:
                xn = 0.5 * (a + b)
            prev = abs(g)
            if xn == x or b - a <= 4 * math.ulp(b):
                return x
            x = xn
        return x

    def estimate_theta(self, x):
        values = getattr(x, "values", x)
        values = np.asarray(values, dtype=float)
        if values.size < 1:
            raise DomainError("empty path")
        return self.f_inverse(float(np.mean(values * values)))


def _check_theta(theta):
    if not (0.0 < theta < 1.0):
        raise DomainError(f"theta must lie in (0, 1), got {theta!r}")


def _secant_start(a, b, fa, fb, y):
    x = a + (b - a) * (y - fa) / (fb - fa)
    return min(max(x, a + 1e-3 * (b - a)), b - 1e-3 * (b - a))


def f_theta(ctx, theta):
    return ctx.f(theta)


def f_prime(ctx, theta):
    return ctx.f_prime(theta)


def r_cov(ctx, k):
    return ctx.r_cov(k)


def sigma_h2(ctx):
    return ctx.sigma_h2()


def v_n2(ctx, n):
    return ctx.v_n2(n)


def f_inverse(ctx, y, guess=None):
    return ctx.f_inverse(y, guess)


def estimate_theta(ctx, x):
    return ctx.estimate_theta(x)
