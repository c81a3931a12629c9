"""Autocovariance models for long-memory Gaussian noise.

Every built-in model is normalized so that ``rho(0) == 1`` and decays
like ``L(k) |k|^(2H-2)`` with ``H`` in (1/2, 1).  White noise is kept as
an analytic oracle; it carries no Hurst index and is excluded from the
long-memory code paths.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

__all__ = [
    "ModelKind",
    "CovarianceModel",
    "SpectralEstimate",
    "cov_fgn",
    "cov_arfima",
    "spectral_density_estimate",
    "duality_constant",
    "transfer_spectral_density",
    "parse_model",
]

# Below this lag the fGn formula is evaluated directly; above it the
# second difference of k^(2H) is expanded in 1/k to avoid cancellation.
_FGN_SERIES_LAG = 4
_FGN_SERIES_TERMS = 16


class ModelKind(enum.Enum):
    FGN = "fgn"
    ARFIMA = "arfima"
    WHITE = "white"
    CUSTOM = "custom"


def _check_hurst(H):
    if not (0.5 < H < 1.0):
        raise DomainError(f"Hurst index must lie in (1/2, 1), got {H!r}")


def _fgn_acf(k, H):
    """fGn autocovariance on an integer array, stable for large lags."""
    k = np.abs(np.asarray(k, dtype=float))
    out = np.empty_like(k)
    a = 2.0 * H

    small = k < _FGN_SERIES_LAG
    ks = k[small]
    out[small] = 0.5 * (np.abs(ks + 1.0) ** a + np.abs(ks - 1.0) ** a - 2.0 * ks ** a)

    kb = k[~small]
    if kb.size:
        # (1+x)^a + (1-x)^a - 2 = 2 * sum_{j>=1} C(a, 2j) x^(2j), x = 1/k
        x2 = (1.0 / kb) ** 2
        coef = 1.0
        acc = np.zeros_like(kb)
        xp = np.ones_like(kb)
        for j in range(1, _FGN_SERIES_TERMS + 1):
            coef *= (a - (2 * j - 2)) * (a - (2 * j - 1)) / ((2 * j - 1) * (2 * j))
            xp = xp * x2
            acc += coef * xp
        out[~small] = kb ** a * acc
    return out


def _arfima_acf(k, d):
    """ARFIMA(0, d, 0) autocorrelation by the product recurrence."""
    k = np.abs(np.asarray(k, dtype=np.int64))
    if k.size == 0:
        return np.zeros(0)
    kmax = int(k.max())
    j = np.arange(1, kmax + 1, dtype=float)
    table = np.empty(kmax + 1)
    table[0] = 1.0
    table[1:] = np.cumprod((j - 1.0 + d) / (j - d))
    return table[k]


@dataclass(frozen=True)
class CovarianceModel:
    """Stationary Gaussian noise law given by its autocovariance.

    Build instances through the ``fgn``, ``arfima``, ``white_noise`` and
    ``custom`` constructors rather than directly.

    Attributes
    ----------
    kind : ModelKind
    param : float or None
        ``H`` for fGn, ``d`` for ARFIMA, None otherwise.
    hurst : float or None
        Declared Hurst index; None marks a short-memory oracle model.
    scale : float or None
        Declared asymptotic constant of the slowly varying factor, i.e.
        ``rho(k) k^(2-2H) -> scale``.  Known in closed form for fGn.
    """

    kind: ModelKind
    param: Optional[float] = None
    hurst: Optional[float] = None
    scale: Optional[float] = None
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, compare=False, repr=False
    )
    name: str = ""

    @classmethod
    def fgn(cls, H):
        _check_hurst(H)
        return cls(ModelKind.FGN, float(H), float(H), H * (2 * H - 1), name=f"fgn:{H:g}")

    @classmethod
    def arfima(cls, d):
        if not (0.0 < d < 0.5):
            raise DomainError(f"ARFIMA memory parameter must lie in (0, 1/2), got {d!r}")
        # rho(k) ~ Gamma(1-d)/Gamma(d) k^(2d-1)
        scale = math.gamma(1 - d) / math.gamma(d)
        return cls(ModelKind.ARFIMA, float(d), d + 0.5, scale, name=f"arfima:{d:g}")

    @classmethod
    def white_noise(cls):
        return cls(ModelKind.WHITE, name="white")

    @classmethod
    def custom(cls, evaluator, hurst, scale=None, name="custom", check_lags=256):
        """Wrap a user autocovariance.

        The evaluator must accept an integer numpy array of lags and return
        an array of the same shape.  Only finite-range properties are
        checked (normalization, symmetry, ``|rho| <= 1``); the slowly
        varying condition is trusted as declared.
        """
        _check_hurst(hurst)
        model = cls(ModelKind.CUSTOM, None, float(hurst), scale, evaluator, name)
        k = np.arange(0, check_lags + 1)
        pos = np.asarray(evaluator(k), dtype=float)
        neg = np.asarray(evaluator(-k), dtype=float)
        if pos.shape != k.shape or not np.all(np.isfinite(pos)):
            raise DomainError("custom evaluator must return finite values per lag")
        if pos[0] != 1.0:
            raise DomainError(f"custom model must satisfy rho(0) == 1, got {pos[0]!r}")
        if not np.array_equal(pos, neg):
            raise DomainError("custom model is not symmetric in the lag")
        if np.any(np.abs(pos) > 1.0):
            raise DomainError("custom model has |rho(k)| > 1")
        return model

    @property
    def long_memory(self):
        return self.hurst is not None

    def acf(self, k):
        """Evaluate ``rho`` on an integer lag or array of lags."""
        scalar = np.ndim(k) == 0
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        if self.kind is ModelKind.FGN:
            out = _fgn_acf(k, self.param)
        elif self.kind is ModelKind.ARFIMA:
            out = _arfima_acf(k, self.param)
        elif self.kind is ModelKind.WHITE:
            out = (k == 0).astype(float)
        else:
            out = np.asarray(self.evaluator(k), dtype=float)
        return float(out[0]) if scalar else out

    def table(self, K):
        """Return ``rho(0..K)`` as an array."""
        return self.acf(np.arange(K + 1))


def cov_fgn(k, H):
    """Fractional Gaussian noise autocovariance at integer lag ``k``."""
    _check_hurst(H)
    return float(_fgn_acf(np.array([k]), H)[0])


def cov_arfima(k, d):
    """Normalized ARFIMA(0, d, 0) autocorrelation at integer lag ``k``."""
    if not (0.0 < d < 0.5):
        raise DomainError(f"ARFIMA memory parameter must lie in (0, 1/2), got {d!r}")
    return float(_arfima_acf(np.array([k]), d)[0])


@dataclass(frozen=True)
class SpectralEstimate:
    lam: float
    value: float
    truncation_k: int


def _check_lambda(lam):
    if not (0.0 < lam <= math.pi):
        raise DomainError(f"frequency must lie in (0, pi], got {lam!r}")


def spectral_density_estimate(model, lam, K=1000):
    """Truncated Fourier sum ``(2 pi)^-1 sum_{|k|<=K} rho(k) e^{-ik lam}``.

    The imaginary part cancels by symmetry, so only cosines are summed.
    """
    _check_lambda(lam)
    if K < 1:
        raise DomainError(f"truncation K must be >= 1, got {K!r}")
    rho = model.table(K)
    k = np.arange(1, K + 1, dtype=float)
    total = rho[0] + 2.0 * math.fsum(rho[1:] * np.cos(k * lam))
    return SpectralEstimate(float(lam), total / (2.0 * math.pi), int(K))


def duality_constant(H):
    """``C_H = Gamma(2H-1) sin(pi - pi H) / pi`` linking the ACF and spectral tails."""
    _check_hurst(H)
    return math.gamma(2 * H - 1) * math.sin(math.pi - math.pi * H) / math.pi


def transfer_spectral_density(theta, model, lam, K=1000):
    """Spectral density of the stationary AR(1) solution driven by ``model``."""
    if not (0.0 < theta < 1.0):
        raise DomainError(f"theta must lie in (0, 1), got {theta!r}")
    h = spectral_density_estimate(model, lam, K).value
    return h / (1.0 - 2.0 * theta * math.cos(lam) + theta * theta)


def parse_model(text):
    """Parse ``fgn:H``, ``arfima:d`` or ``white`` into a model."""
    text = text.strip().lower()
    if text == "white":
        return CovarianceModel.white_noise()
    kind, sep, value = text.partition(":")
    if not sep:
        raise DomainError(f"model must be fgn:H, arfima:d or white, got {text!r}")
    try:
        x = float(value)
    except ValueError:
        raise DomainError(f"bad model parameter {value!r}") from None
    if kind == "fgn":
        return CovarianceModel.fgn(x)
    if kind == "arfima":
        return CovarianceModel.arfima(x)
    raise DomainError(f"unknown model kind {kind!r}")
