"""Monte Carlo harness for the estimator's limit theorems.

Replicate ``r`` at sample size ``n`` uses the seed
``derive_seed(base_seed, n, r)``.  Replicates are processed in fixed-size
chunks whose composition does not depend on the number of worker threads,
so results are bit-identical for any ``LMAR_THREADS``.
"""

from __future__ import annotations

import enum
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .ar1 import Ar1Model, ar1_filter, generate_x_path
from .asymptotics import (
    RateCurve,
    asclt_log_average,
    dtv_bound_curve,
    normalized_error,
    running_estimates,
)
from .covariance import parse_model
from .errors import (
    AboveRange,
    BelowRange,
    CensoredExperiment,
    ConfigError,
    DomainError,
    UnsupportedRegime,
)
from .gaussian_sim import (
    derive_seed,
    plan_embedding,
    sample_stationary_batch,
    standard_normals,
)
from .moments import MomentContext, TruncationPolicy, check_regime

__all__ = [
    "ExperimentKind",
    "ExperimentConfig",
    "ReplicateRecord",
    "ExperimentResult",
    "ks_distance",
    "thread_count",
    "run_experiment",
    "run_consistency",
    "run_clt",
    "run_asclt",
    "run_berry_esseen",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CHUNK = 32
FIT_FLOOR_FACTOR = 3.0


class ExperimentKind(enum.Enum):
    CONSISTENCY = "consistency"
    CLT = "clt"
    ASCLT = "asclt"
    BERRY_ESSEEN = "berry_esseen"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentKind
    model: str
    theta: float
    n_values: tuple
    replicates: int
    base_seed: int = 0
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)
    z_grid: tuple = (-1.0, 0.0, 1.0)
    epsilon: float = 0.01

    @classmethod
    def from_dict(cls, d):
        """Validate a JSON-like mapping, collecting every offending field."""
        bad = []
        if not isinstance(d, dict):
            raise ConfigError(["<root>: expected an object"])
        known = {
            "schema", "experiment", "model", "theta", "n_values", "replicates",
            "base_seed", "truncation", "z_grid", "epsilon",
        }
        for key in sorted(set(d) - known):
            bad.append(f"{key}: unknown field")
        if d.get("schema") != SCHEMA_VERSION:
            bad.append(f"schema: must be {SCHEMA_VERSION}")
        for key in ("experiment", "model", "theta", "n_values", "replicates"):
            if key not in d:
                bad.append(f"{key}: required")

        kind = None
        if "experiment" in d:
            try:
                kind = ExperimentKind(d["experiment"])
            except ValueError:
                choices = ", ".join(k.value for k in ExperimentKind)
                bad.append(f"experiment: must be one of {choices}")
        if "model" in d:
            try:
                if not isinstance(d["model"], str):
                    raise DomainError("not a string")
                parse_model(d["model"])
            except DomainError as exc:
                bad.append(f"model: {exc}")
        theta = d.get("theta")
        if "theta" in d and not (_is_number(theta) and 0.0 < theta < 1.0):
            bad.append("theta: must be a number in (0, 1)")
        n_values = d.get("n_values")
        if "n_values" in d:
            if (
                not isinstance(n_values, list)
                or not n_values
                or not all(_is_int(v) and v >= 1 for v in n_values)
                or any(b <= a for a, b in zip(n_values, n_values[1:]))
            ):
                bad.append("n_values: must be a non-empty strictly increasing list of integers >= 1")
        reps = d.get("replicates")
        if "replicates" in d and not (_is_int(reps) and reps >= 1):
            bad.append("replicates: must be an integer >= 1")
        seed = d.get("base_seed", 0)
        if not (_is_int(seed) and 0 <= seed < 2 ** 64):
            bad.append("base_seed: must be an integer in [0, 2^64)")
        z_grid = d.get("z_grid", [-1.0, 0.0, 1.0])
        if not (isinstance(z_grid, list) and z_grid and all(_is_number(z) for z in z_grid)):
            bad.append("z_grid: must be a non-empty list of numbers")
        eps = d.get("epsilon", 0.01)
        if not (_is_number(eps) and 0.0 < eps <= 0.1):
            bad.append("epsilon: must be a number in (0, 0.1]")
        trunc = d.get("truncation", {})
        policy = None
        if not isinstance(trunc, dict):
            bad.append("truncation: must be an object")
        else:
            extra = set(trunc) - {"theta_tail_tol", "rho_cutoff", "sigma_tail_check"}
            if extra:
                bad.append(f"truncation: unknown keys {sorted(extra)}")
            else:
                try:
                    policy = TruncationPolicy(**trunc)
                except (DomainError, TypeError) as exc:
                    bad.append(f"truncation: {exc}")
        if kind is ExperimentKind.BERRY_ESSEEN and isinstance(n_values, list) and len(n_values) < 3:
            bad.append("n_values: berry_esseen needs at least 3 sample sizes")
        if bad:
            raise ConfigError(bad)
        return cls(
            kind, d["model"], float(theta), tuple(int(v) for v in n_values), int(reps),
            int(seed), policy, tuple(float(z) for z in z_grid), float(eps),
        )

    def to_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "experiment": self.experiment.value,
            "model": self.model,
            "theta": self.theta,
            "n_values": list(self.n_values),
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "truncation": asdict(self.truncation),
            "z_grid": list(self.z_grid),
            "epsilon": self.epsilon,
        }

    @property
    def ar1(self):
        return Ar1Model(self.theta, parse_model(self.model))


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


@dataclass(frozen=True)
class ReplicateRecord:
    n: int
    replicate: int
    seed: int
    theta_hat: Optional[float]
    censored: bool
    normalized_error: Optional[float]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    aggregates: dict
    theory: dict

    def retained(self, n):
        return [r for r in self.records if r.n == n and not r.censored]

    def censoring_summary(self):
        out = {}
        for n in self.config.n_values:
            rows = [r for r in self.records if r.n == n]
            out[str(n)] = {
                "replicates": len(rows),
                "censored": sum(r.censored for r in rows),
            }
        return out

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "aggregates": self.aggregates,
            "theory": self.theory,
            "censoring": self.censoring_summary(),
        }


def thread_count():
    """Worker threads from ``LMAR_THREADS``; defaults to the CPU count."""
    raw = os.environ.get("LMAR_THREADS")
    if raw is None:
        return max(1, os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        raise ConfigError([f"LMAR_THREADS: must be an integer >= 1, got {raw!r}"])
    return value


def _parallel_map(fn, items):
    threads = thread_count()
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def ks_distance(samples):
    """One-sample Kolmogorov-Smirnov distance of ``samples`` to N(0, 1)."""
    x = np.sort(np.asarray(samples, dtype=float))
    m = x.size
    if m == 0:
        raise DomainError("empty sample")
    cdf = ndtr(x)
    i = np.arange(1, m + 1)
    return float(max(np.max(np.abs(i / m - cdf)), np.max(np.abs((i - 1) / m - cdf))))


# -- replicate engine ---------------------------------------------------------


def _estimate_chunk(ctx, plan, n, seeds):
    if n == 1:
        xi = np.stack([standard_normals(s, 1) for s in seeds])
    else:
        xi = sample_stationary_batch(plan, seeds)
    x = ar1_filter(xi, ctx.theta, axis=1)
    second = np.mean(x * x, axis=1)
    out = []
    for s in second:
        try:
            out.append(ctx.f_inverse(float(s)))
        except (BelowRange, AboveRange):
            out.append(None)
    return out


def _replicate_estimates(config, ctx, n):
    seeds = [derive_seed(config.base_seed, n, r) for r in range(config.replicates)]
    plan = plan_embedding(ctx.model.noise, n) if n > 1 else None
    chunks = [seeds[i : i + CHUNK] for i in range(0, len(seeds), CHUNK)]
    parts = _parallel_map(lambda c: _estimate_chunk(ctx, plan, n, c), chunks)
    estimates = [e for part in parts for e in part]
    return seeds, estimates


def _sigma_or_none(ctx):
    try:
        return ctx.sigma_h2()
    except UnsupportedRegime:
        return None


def _collect_records(config, ctx):
    records = []
    sigma = _sigma_or_none(ctx)
    for n in config.n_values:
        seeds, estimates = _replicate_estimates(config, ctx, n)
        for r, (seed, est) in enumerate(zip(seeds, estimates)):
            g = None
            if est is not None and sigma is not None:
                g = float(normalized_error(est, ctx.theta, n, ctx))
            records.append(ReplicateRecord(n, r, seed, est, est is None, g))
        log.info("n=%d: %d replicates done", n, len(seeds))
    return records


def _context(config):
    return MomentContext(config.ar1, config.truncation)


def theory_sidecar(ctx, n_values, epsilon):
    """Exact asymptotic quantities on the experiment's sample sizes."""
    noise = ctx.model.noise
    out = {
        "f": ctx.f_value,
        "f_prime": ctx.f_prime_value,
        "sigma_H2": _sigma_or_none(ctx),
        "hurst": noise.hurst,
        "n": list(n_values),
        "v_n2": [ctx.v_n2(n) for n in n_values],
        "dtv_bound": [float(b) for b in dtv_bound_curve(ctx, n_values)],
        "be_rate": None,
        "be_exponent": None,
    }
    if noise.hurst is not None and noise.hurst < 0.75:
        curve = RateCurve(noise.hurst, epsilon)
        out["be_rate"] = [float(curve(n)) for n in n_values]
        out["be_exponent"] = -curve.exponent
    return out


def per_n_summary(config, records):
    """Error statistics per sample size, recomputable from the records."""
    rows = []
    for n in config.n_values:
        subset = [r for r in records if r.n == n]
        est = np.array([r.theta_hat for r in subset if not r.censored], dtype=float)
        g = np.array(
            [r.normalized_error for r in subset if r.normalized_error is not None], dtype=float
        )
        row = {
            "n": n,
            "replicates": len(subset),
            "retained": int(est.size),
            "censored": len(subset) - int(est.size),
            "mean_theta_hat": None,
            "mean_abs_error": None,
            "rmse": None,
            "g_mean": None,
            "g_variance": None,
            "ks_distance": None,
        }
        if est.size:
            err = est - config.theta
            row["mean_theta_hat"] = float(np.mean(est))
            row["mean_abs_error"] = float(np.mean(np.abs(err)))
            row["rmse"] = float(np.sqrt(np.mean(err * err)))
        if g.size:
            row["g_mean"] = float(np.mean(g))
            row["g_variance"] = float(np.var(g, ddof=1)) if g.size > 1 else 0.0
            row["ks_distance"] = ks_distance(g)
        rows.append(row)
    return rows


# -- experiments ----------------------------------------------------------------


def _require(config, kind):
    if config.experiment is not kind:
        raise ConfigError([f"experiment: expected {kind.value}, got {config.experiment.value}"])


def run_consistency(config):
    _require(config, ExperimentKind.CONSISTENCY)
    ctx = _context(config)
    records = _collect_records(config, ctx)
    aggregates = {"per_n": per_n_summary(config, records)}
    return ExperimentResult(config, records, aggregates, theory_sidecar(ctx, config.n_values, config.epsilon))


def run_clt(config):
    """Normalized errors against N(0, 1) at the largest sample size."""
    _require(config, ExperimentKind.CLT)
    ctx = _context(config)
    check_regime(ctx.model.noise)
    records = _collect_records(config, ctx)
    per_n = per_n_summary(config, records)
    top = per_n[-1]
    if top["retained"] == 0:
        raise CensoredExperiment(f"all {config.replicates} replicates censored at n={top['n']}")
    aggregates = {
        "per_n": per_n,
        "clt": {
            "n": top["n"],
            "ks_distance": top["ks_distance"],
            # the KS statistic is already the sup over the ECDF jump points
            "sup_cdf_distance": top["ks_distance"],
            "g_mean": top["g_mean"],
            "g_variance": top["g_variance"],
        },
    }
    return ExperimentResult(config, records, aggregates, theory_sidecar(ctx, config.n_values, config.epsilon))


def _asclt_replicate(config, ctx, sigma, n, r):
    seed = derive_seed(config.base_seed, n, r)
    x = generate_x_path(ctx.model, n, seed)
    run = running_estimates(ctx, x, np.arange(1, n + 1))
    k = run.grid.astype(float)
    g = ctx.f_prime_value * np.sqrt(k) * (run.theta_hat - ctx.theta) / math.sqrt(sigma)
    averages = [asclt_log_average(g, z) for z in config.z_grid]
    last = run.theta_hat[-1]
    censored = bool(np.isnan(last))
    rec = ReplicateRecord(
        n, r, seed,
        None if censored else float(last),
        censored,
        None if censored else float(g[-1]),
    )
    return rec, averages, int(run.censored.sum())


def run_asclt(config):
    """Logarithmic averages of ``1{G_k <= z}`` along single trajectories."""
    _require(config, ExperimentKind.ASCLT)
    ctx = _context(config)
    check_regime(ctx.model.noise)
    sigma = ctx.sigma_h2()
    n = config.n_values[-1]
    if n < 2:
        raise ConfigError(["n_values: asclt needs n >= 2"])
    out = _parallel_map(
        lambda r: _asclt_replicate(config, ctx, sigma, n, r), list(range(config.replicates))
    )
    records = [o[0] for o in out]
    averages = np.array([o[1] for o in out])
    table = []
    for j, z in enumerate(config.z_grid):
        target = float(ndtr(z))
        col = averages[:, j]
        table.append({
            "z": z,
            "phi": target,
            "mean_average": float(np.mean(col)),
            "mean_abs_deviation": float(np.mean(np.abs(col - target))),
            "averages": [float(a) for a in col],
        })
    aggregates = {
        "asclt": table,
        "n": n,
        "censored_prefixes": [o[2] for o in out],
        "harmonic_over_log": float(np.sum(1.0 / np.arange(1, n + 1)) / math.log(n)),
    }
    return ExperimentResult(config, records, aggregates, theory_sidecar(ctx, [n], config.epsilon))


def _fit_rate(ns, d, floor):
    keep = d >= FIT_FLOOR_FACTOR * floor
    used_all = int(keep.sum()) < 2
    if used_all:
        keep = np.ones_like(keep)
    fit = stats.linregress(np.log(ns[keep]), np.log(d[keep]))
    return {
        "slope": float(fit.slope),
        "stderr": float(fit.stderr),
        "intercept": float(fit.intercept),
        "points": [int(v) for v in ns[keep]],
        "used_all_points": bool(used_all),
    }


def run_berry_esseen(config):
    """Empirical sup-distance ``d_n`` per sample size and its log-log slope."""
    _require(config, ExperimentKind.BERRY_ESSEEN)
    ctx = _context(config)
    check_regime(ctx.model.noise)
    records = _collect_records(config, ctx)
    per_n = per_n_summary(config, records)
    rows = []
    for row in per_n:
        if row["retained"] == 0:
            raise CensoredExperiment(f"all replicates censored at n={row['n']}")
        rows.append({
            "n": row["n"],
            "d_n": row["ks_distance"],
            "noise_floor": 1.0 / math.sqrt(row["retained"]),
            "retained": row["retained"],
        })
    ns = np.array([r["n"] for r in rows], dtype=float)
    d = np.array([r["d_n"] for r in rows])
    floor = np.array([r["noise_floor"] for r in rows])
    fit = _fit_rate(ns, d, floor)
    for r in rows:
        r["used_in_fit"] = r["n"] in fit["points"]
    aggregates = {
        "per_n": per_n,
        "berry_esseen": rows,
        "fit": fit,
        "inversions": int(np.sum(np.diff(d) > 0)),
    }
    return ExperimentResult(config, records, aggregates, theory_sidecar(ctx, config.n_values, config.epsilon))


_RUNNERS = {
    ExperimentKind.CONSISTENCY: run_consistency,
    ExperimentKind.CLT: run_clt,
    ExperimentKind.ASCLT: run_asclt,
    ExperimentKind.BERRY_ESSEEN: run_berry_esseen,
}


def run_experiment(config):
    return _RUNNERS[config.experiment](config)
