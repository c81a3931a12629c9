"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (visible under ``pytest -v``)
before asserting.  Seeds for the Monte Carlo criteria are fixed up front:
consistency 1, CLT 2, Berry-Esseen 3, ASCLT 4.
"""

import math

import numpy as np
import pytest
from scipy import stats

from conftest import brute_double_sum
from lmar.ar1 import Ar1Model
from lmar.asymptotics import dtv_bound_curve, dtv_fourth_moment_bound, normalized_error
from lmar.cli import main
from lmar.covariance import CovarianceModel, duality_constant, spectral_density_estimate
from lmar.errors import UnsupportedRegime
from lmar.experiments import (
    ExperimentConfig,
    run_asclt,
    run_berry_esseen,
    run_clt,
    run_consistency,
)
from lmar.gaussian_sim import plan_embedding, sample_stationary_batch
from lmar.moments import MomentContext
from lmar.report import records_to_csv

pytestmark = pytest.mark.slow

SEEDS = {"consistency": 1, "clt": 2, "berry_esseen": 3, "asclt": 4}

CONFIGS = {
    "consistency": dict(model="fgn:0.7", n_values=[10 ** 3, 10 ** 4], replicates=200),
    "clt": dict(model="fgn:0.6", n_values=[5000], replicates=1000),
    "asclt": dict(model="fgn:0.7", n_values=[10 ** 5], replicates=20, z_grid=[-1.0, 0.0, 1.0]),
    "berry_esseen": dict(model="fgn:0.6", n_values=[2 ** k for k in range(10, 15)], replicates=5000),
}
RUNNERS = {
    "consistency": run_consistency,
    "clt": run_clt,
    "asclt": run_asclt,
    "berry_esseen": run_berry_esseen,
}


def acceptance_config(name):
    return ExperimentConfig.from_dict(
        {"schema": 1, "experiment": name, "theta": 0.5, "base_seed": SEEDS[name], **CONFIGS[name]}
    )


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number:>2}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def runs():
    """Runs 4-7 under LMAR_THREADS=8 (primary) and LMAR_THREADS=1 (replay)."""
    out = {}
    for threads in ("8", "1"):
        with pytest.MonkeyPatch.context() as mp:
            mp.setenv("LMAR_THREADS", threads)
            out[threads] = {name: RUNNERS[name](acceptance_config(name)) for name in RUNNERS}
    return out


def test_c01_reduced_forms_match_double_sums(capsys):
    worst = 0.0
    for noise in (CovarianceModel.fgn(0.6), CovarianceModel.fgn(0.7), CovarianceModel.arfima(0.2)):
        for theta in (0.2, 0.5, 0.8):
            ctx = MomentContext(Ar1Model(theta, noise))
            pairs = [(ctx.f(theta), brute_double_sum(noise, theta))]
            pairs += [(ctx.r_cov(k), brute_double_sum(noise, theta, k)) for k in (1, 2, 5, 20)]
            worst = max(worst, max(abs(a / b - 1) for a, b in pairs))
    report(capsys, 1, worst < 1e-10, f"max relative deviation {worst:.3e} (tol 1e-10)")


def test_c02_white_noise_closed_forms(capsys):
    ctx = MomentContext(Ar1Model(0.5, CovarianceModel.white_noise()))
    got = {"f": ctx.f(), "f'": ctx.f_prime(), "R(1)": ctx.r_cov(1), "sigma2": ctx.sigma_h2()}
    want = {"f": 4 / 3, "f'": 16 / 9, "R(1)": 2 / 3, "sigma2": 160 / 27}
    dev = max(abs(got[k] - want[k]) for k in want)
    report(capsys, 2, dev < 1e-10, f"max abs deviation {dev:.3e} (tol 1e-10)")


def test_c03_exact_sampler_covariance(capsys):
    model = CovarianceModel.fgn(0.7)
    n, reps, chunk = 64, 200_000, 10_000
    plan = plan_embedding(model, n)
    s1 = np.zeros((n, n))
    s2 = np.zeros((n, n))
    for start in range(0, reps, chunk):
        x = sample_stationary_batch(plan, range(start, start + chunk))
        s1 += x.T @ x
        s2 += (x * x).T @ (x * x)
    mean = s1 / reps
    se = np.sqrt((s2 / reps - mean ** 2) / (reps - 1))
    target = model.acf(np.subtract.outer(np.arange(n), np.arange(n)))
    frac = float(np.mean(np.abs(mean - target) <= 4 * se))
    report(capsys, 3, frac >= 0.99, f"{frac:.4f} of entries within 4 SE (need >= 0.99)")


def test_c04_consistency(capsys, runs):
    per_n = runs["8"]["consistency"].aggregates["per_n"]
    small, large = per_n
    ok = large["rmse"] < small["rmse"] and abs(large["mean_theta_hat"] - 0.5) < 0.03
    report(capsys, 4, ok,
           f"RMSE(1e3)={small['rmse']:.4f}, RMSE(1e4)={large['rmse']:.4f}, "
           f"mean theta_hat(1e4)={large['mean_theta_hat']:.4f} (tol 0.03)")


def test_c05_clt(capsys, runs):
    clt = runs["8"]["clt"].aggregates["clt"]
    ok = clt["ks_distance"] < 0.06 and 0.8 < clt["g_variance"] < 1.25
    report(capsys, 5, ok, f"KS={clt['ks_distance']:.4f} (tol 0.06), Var(G_n)={clt['g_variance']:.4f} in (0.8, 1.25)")


def test_c06_asclt(capsys, runs):
    table = runs["8"]["asclt"].aggregates["asclt"]
    devs = {row["z"]: row["mean_abs_deviation"] for row in table}
    ok = all(d < 0.1 for d in devs.values())
    text = ", ".join(f"z={z:+.0f}: {d:.4f}" for z, d in devs.items())
    report(capsys, 6, ok, f"mean |log-average - Phi(z)| {text} (tol 0.1)")


def test_c07_berry_esseen(capsys, runs):
    res = runs["8"]["berry_esseen"]
    agg = res.aggregates
    slope = agg["fit"]["slope"]
    overlay = res.theory["be_exponent"]
    ok = (
        agg["inversions"] <= 1
        and -0.75 <= slope <= -0.2
        and overlay == pytest.approx(-(0.5 - res.config.epsilon))
    )
    d = ", ".join(f"{r['d_n']:.4f}" for r in agg["berry_esseen"])
    report(capsys, 7, ok,
           f"d_n=[{d}], inversions={agg['inversions']} (max 1), slope={slope:.4f} in [-0.75, -0.2], "
           f"overlay exponent {overlay:.2f}, fit used all points={agg['fit']['used_all_points']}")


def test_c08_fourth_moment_bound(capsys):
    ctx = MomentContext(Ar1Model(0.5, CovarianceModel.fgn(0.6)))
    at_one = dtv_fourth_moment_bound(ctx, 1)
    ns = 2 ** np.arange(10, 21)
    slope = stats.linregress(np.log(ns), np.log(dtv_bound_curve(ctx, ns))).slope
    ok = abs(at_one - 2 * math.sqrt(2)) <= 4 * np.finfo(float).eps and -0.55 <= slope <= -0.40
    report(capsys, 8, ok, f"bound(1)={at_one!r} vs 2*sqrt(2), slope={slope:.4f} in [-0.55, -0.40]")


def test_c09_spectral_duality(capsys):
    H, lam = 0.7, 1e-3
    est = spectral_density_estimate(CovarianceModel.fgn(H), lam, 10 ** 6)
    ratio = est.value * lam ** (2 * H - 1) / (duality_constant(H) * H * (2 * H - 1))
    report(capsys, 9, abs(ratio - 1) < 0.05, f"h(lambda) lambda^(2H-1) / (C_H H(2H-1)) = {ratio:.4f} (tol 5%)")


def test_c10_vn2_converges(capsys):
    ctx = MomentContext(Ar1Model(0.5, CovarianceModel.fgn(0.7)))
    ratio = ctx.v_n2(10 ** 6) / ctx.sigma_h2()
    report(capsys, 10, abs(ratio - 1) < 0.005, f"v_n^2(1e6)/sigma_H^2 = {ratio:.5f} (tol 0.5%)")


def test_c11_regime_guard(capsys):
    failures = []
    for H in (0.75, 0.8, 0.9):
        model = Ar1Model(0.5, CovarianceModel.fgn(H))
        ctx = MomentContext(model)
        checks = {
            "sigma_h2": ctx.sigma_h2,
            "normalized_error": lambda: normalized_error(0.4, 0.5, 100, ctx),
        }
        for kind in ("clt", "asclt", "berry_esseen"):
            cfg = ExperimentConfig.from_dict({
                "schema": 1, "experiment": kind, "model": f"fgn:{H}", "theta": 0.5,
                "n_values": [16, 32, 64], "replicates": 2,
            })
            checks[kind] = lambda cfg=cfg: RUNNERS[cfg.experiment.value](cfg)
        for name, fn in checks.items():
            try:
                fn()
                failures.append(f"{name}@H={H} returned")
            except UnsupportedRegime:
                pass
        code = main(["theory", "--model", f"fgn:{H}", "--theta", "0.5", "--n-grid", "8"])
        if code != 3:
            failures.append(f"cli theory@H={H} exit {code}")
    capsys.readouterr()
    report(capsys, 11, not failures, "all sigma_H^2 paths raise UnsupportedRegime" if not failures
           else "; ".join(failures))


def test_c12_thread_count_reproducibility(capsys, runs):
    diffs = [name for name in RUNNERS
             if records_to_csv(runs["8"][name].records) != records_to_csv(runs["1"][name].records)]
    report(capsys, 12, not diffs,
           "per-replicate CSVs byte-identical for LMAR_THREADS in {1, 8}" if not diffs
           else f"CSV differs for {diffs}")
