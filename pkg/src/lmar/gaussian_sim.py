"""Exact sampling of stationary Gaussian sequences.

The primary route is circulant embedding (Davies-Harte): the Toeplitz
covariance of length ``n`` is embedded in a circulant matrix of order
``m >= 2(n-1)`` whose eigenvalues are a real FFT of the symmetric first
row.  When the embedding is not positive semidefinite the caller falls
back to a dense Cholesky factor of the Toeplitz matrix.

All randomness comes from a counter-based Philox stream keyed by a 64-bit
seed, so paths depend only on ``(plan, seed)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .errors import CovarianceNotPSD, EmbeddingNotPSD

__all__ = [
    "PathKind",
    "SamplePath",
    "EmbeddingPlan",
    "plan_embedding",
    "sample_stationary",
    "sample_stationary_batch",
    "sample_stationary_fallback",
    "standard_normals",
    "derive_seed",
]

PSD_RTOL = 1e-9
FALLBACK_MAX_N = 2 ** 13
_JITTERS = (0.0, 1e-12, 1e-10, 1e-8)
_MASK64 = (1 << 64) - 1


class PathKind(enum.Enum):
    NOISE = "noise"
    STATIONARY = "y"
    AR1 = "x"


@dataclass(frozen=True, eq=False)
class SamplePath:
    """A finite real path with provenance.

    ``start`` is the time index of ``values[0]``; AR(1) and noise paths
    start at 1, coupled stationary paths may start at 0.
    """

    values: np.ndarray
    seed: int
    model_tag: str
    kind: PathKind
    start: int = 1

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("a sample path needs at least one value")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample path contains non-finite values")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def n(self):
        return self.values.size

    @property
    def times(self):
        return np.arange(self.start, self.start + self.values.size)


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base, *parts):
    """Mix a base seed with integer coordinates into a 64-bit seed.

    Each coordinate is folded in through a SplitMix64 finalizer, so the
    result depends on the coordinates and their order but not on the
    order in which replicates are executed.
    """
    h = _splitmix64(int(base) & _MASK64)
    for p in parts:
        h = _splitmix64(h ^ (int(p) & _MASK64))
    return h


def _generator(seed):
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))


def standard_normals(seed, count):
    """Deterministic i.i.d. N(0, 1) stream of length ``count`` for ``seed``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return _generator(seed).standard_normal(int(count))


@dataclass(frozen=True, eq=False)
class EmbeddingPlan:
    n: int
    m: int
    eigenvalues: np.ndarray
    psd_ok: bool
    model_tag: str = ""
    min_eigenvalue: float = 0.0


def _lags(source, count, tag):
    if callable(getattr(source, "acf", None)):
        return source.acf(np.arange(count)), getattr(source, "name", tag)
    if callable(source):
        return np.asarray(source(np.arange(count)), dtype=float), tag
    seq = np.asarray(source, dtype=float)
    if seq.size < count:
        raise ValueError(f"covariance sequence has {seq.size} lags, need {count}")
    return seq[:count], tag


def plan_embedding(source, n, *, power_of_two=None, tag="custom", strict=True):
    """Build the circulant embedding of a Toeplitz covariance.

    Parameters
    ----------
    source : CovarianceModel, callable or array_like
        Lag evaluator ``rho(k)`` or an explicit sequence ``rho(0), rho(1), ...``.
    n : int
        Path length, at least 2.
    power_of_two : bool, optional
        Round the circulant order up to a power of two.  Defaults to True
        for evaluators and False for explicit sequences, which then need
        only lags ``0..n-1``.
    strict : bool
        Raise ``EmbeddingNotPSD`` when the embedding fails the tolerance
        test.  With ``strict=False`` the plan is returned with
        ``psd_ok=False`` so the caller can inspect it.
    """
    if n < 2:
        raise ValueError("embedding needs n >= 2")
    if power_of_two is None:
        power_of_two = callable(source) or callable(getattr(source, "acf", None))
    m = 2 * (n - 1)
    if power_of_two:
        m = 1 << (m - 1).bit_length()
    half = m // 2
    rho, tag = _lags(source, half + 1, tag)
    row = np.concatenate([rho, rho[half - 1:0:-1]])
    eig = np.fft.rfft(row).real
    eig = np.concatenate([eig, eig[half - 1:0:-1]])
    top = float(eig.max())
    low = float(eig.min())
    psd_ok = low >= -PSD_RTOL * top
    if not psd_ok and strict:
        raise EmbeddingNotPSD(
            f"circulant embedding of order {m} has eigenvalue {low:.3e} (max {top:.3e})"
        )
    if psd_ok:
        eig = np.clip(eig, 0.0, None)
    eig.setflags(write=False)
    return EmbeddingPlan(n, m, eig, psd_ok, tag, low)


def _check_plan(plan):
    if not plan.psd_ok:
        raise EmbeddingNotPSD("cannot sample from a non-PSD embedding plan")


def _shape(plan, normals):
    m = plan.m
    w = normals[..., :m] + 1j * normals[..., m:]
    z = np.fft.ifft(np.sqrt(plan.eigenvalues) * w, axis=-1) * np.sqrt(m)
    return z.real[..., : plan.n]


def sample_stationary(plan, seed, kind=PathKind.NOISE):
    """Draw one exact path of length ``plan.n`` from the embedding."""
    _check_plan(plan)
    x = _shape(plan, standard_normals(seed, 2 * plan.m))
    return SamplePath(x, int(seed), plan.model_tag, kind)


def sample_stationary_batch(plan, seeds):
    """Draw one path per seed; returns an array of shape ``(len(seeds), n)``.

    Row ``i`` has the same law as ``sample_stationary(plan, seeds[i])`` and
    depends only on that seed and on the batch composition.
    """
    _check_plan(plan)
    normals = np.stack([standard_normals(s, 2 * plan.m) for s in seeds])
    return _shape(plan, normals)


def sample_stationary_fallback(rho, n, seed, kind=PathKind.NOISE, tag="custom"):
    """Exact sampling through a dense Cholesky factor of the Toeplitz matrix.

    A diagonal jitter of 1e-12, 1e-10 and 1e-8 is tried in turn when the
    plain factorization fails.
    """
    if n > FALLBACK_MAX_N:
        raise ValueError(f"dense fallback limited to n <= {FALLBACK_MAX_N}")
    lags, tag = _lags(rho, n, tag)
    cov = toeplitz(lags)
    for jitter in _JITTERS:
        try:
            factor = np.linalg.cholesky(cov + jitter * np.eye(n))
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise CovarianceNotPSD(f"Toeplitz covariance of order {n} is not PSD")
    z = standard_normals(seed, n)
    return SamplePath(factor @ z, int(seed), tag, kind)
