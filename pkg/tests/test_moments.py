import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_double_sum
from lmar.ar1 import Ar1Model
from lmar.covariance import CovarianceModel
from lmar.errors import (
    AboveRange,
    BelowRange,
    DomainError,
    ModelNotMonotone,
    TruncationInsufficient,
    UnsupportedRegime,
)
from lmar.gaussian_sim import SamplePath, PathKind
from lmar.moments import (
    MONOTONE_GRID,
    MomentContext,
    TruncationPolicy,
    estimate_theta,
    f_inverse,
    f_prime,
    f_theta,
    r_cov,
    sigma_h2,
    v_n2,
)

NOISES = [CovarianceModel.fgn(0.6), CovarianceModel.fgn(0.7), CovarianceModel.arfima(0.2)]


def ctx_for(noise, theta=0.5, **policy):
    return MomentContext(Ar1Model(theta, noise), TruncationPolicy(**policy) if policy else None)


class TestPolicy:
    def test_validation(self):
        with pytest.raises(DomainError):
            TruncationPolicy(theta_tail_tol=1e-3)
        with pytest.raises(DomainError):
            TruncationPolicy(rho_cutoff=10)

    def test_terms(self):
        p = TruncationPolicy()
        assert 0.5 ** p.terms(0.5) < 1e-14 <= 0.5 ** (p.terms(0.5) - 1)


class TestF:
    def test_white(self, ctx_white):
        assert f_theta(ctx_white, 0.5) == pytest.approx(4 / 3, rel=1e-15)

    def test_small_theta(self, ctx_fgn7):
        assert abs(f_theta(ctx_fgn7, 1e-8) - 1) < 1e-7

    @pytest.mark.parametrize("noise", NOISES, ids=lambda m: m.name)
    @pytest.mark.parametrize("theta", [0.2, 0.5, 0.8])
    def test_matches_double_sum(self, noise, theta):
        ctx = ctx_for(noise, theta)
        assert ctx.f(theta) == pytest.approx(brute_double_sum(noise, theta), rel=1e-10)

    def test_domain(self, ctx_fgn7):
        with pytest.raises(DomainError):
            f_theta(ctx_fgn7, 1.0)

    @pytest.mark.parametrize("noise", NOISES + [CovarianceModel.white_noise()], ids=lambda m: m.name)
    def test_monotone(self, noise):
        ctx = ctx_for(noise)
        vals = [ctx.f(t) for t in MONOTONE_GRID]
        assert np.all(np.diff(vals) > 0)
        assert ctx.monotone
        assert min(vals) > 1


class TestFPrime:
    def test_white(self, ctx_white):
        assert f_prime(ctx_white, 0.5) == pytest.approx(16 / 9, rel=1e-14)

    @pytest.mark.parametrize("noise", NOISES, ids=lambda m: m.name)
    def test_finite_difference(self, noise):
        ctx = ctx_for(noise)
        h = 1e-6
        for t in MONOTONE_GRID[1:-1]:
            fd = (ctx.f(t + h) - ctx.f(t - h)) / (2 * h)
            assert abs(ctx.f_prime(t) - fd) / ctx.f_prime(t) < 1e-6

    @pytest.mark.parametrize("noise", NOISES, ids=lambda m: m.name)
    def test_positive(self, noise):
        ctx = ctx_for(noise)
        assert all(ctx.f_prime(t) > 0 for t in np.arange(0.05, 0.96, 0.05))


class TestR:
    def test_white(self, ctx_white):
        assert r_cov(ctx_white, 1) == pytest.approx(2 / 3, rel=1e-15)
        assert r_cov(ctx_white, 5) == pytest.approx(0.5 ** 5 / 0.75, rel=1e-14)

    def test_symmetry(self, ctx_fgn7):
        for k in (1, 7, 300):
            assert r_cov(ctx_fgn7, k) == r_cov(ctx_fgn7, -k)

    def test_r0_is_f(self, ctx_fgn7, ctx_white):
        for ctx in (ctx_fgn7, ctx_white):
            assert abs(ctx.r_cov(0) - ctx.f()) < 1e-12 * ctx.f()

    @pytest.mark.parametrize("noise", NOISES, ids=lambda m: m.name)
    @pytest.mark.parametrize("theta", [0.2, 0.5, 0.8])
    @pytest.mark.parametrize("k", [1, 3, 40])
    def test_matches_double_sum(self, noise, theta, k):
        ctx = ctx_for(noise, theta)
        assert ctx.r_cov(k) == pytest.approx(brute_double_sum(noise, theta, k), rel=1e-10)

    def test_tail_power_law(self, ctx_fgn7):
        # R(k) ~ (1-theta)^-2 H(2H-1) k^(2H-2)
        k = 10 ** 5
        assert ctx_fgn7.r_cov(k) * k ** 0.6 == pytest.approx(4 * 0.28, rel=1e-3)


class TestSigma:
    def test_white(self, ctx_white):
        assert sigma_h2(ctx_white) == pytest.approx(2 * 1.25 / 0.75 ** 3, rel=1e-12)

    def test_truncation_stability(self, ctx_fgn7):
        small = ctx_for(CovarianceModel.fgn(0.7), rho_cutoff=10 ** 5)
        assert sigma_h2(small) == pytest.approx(sigma_h2(ctx_fgn7), rel=1e-3)

    def test_unsupported(self):
        for theta in (0.2, 0.7):
            with pytest.raises(UnsupportedRegime):
                sigma_h2(ctx_for(CovarianceModel.fgn(0.8), theta))
        with pytest.raises(UnsupportedRegime):
            sigma_h2(ctx_for(CovarianceModel.fgn(0.75)))

    def test_tail_check_rejects_non_power_law(self):
        # rho ~ k^(-0.6) / log k: the declared H fits badly at the cutoff
        def rho(k):
            k = np.abs(k).astype(float)
            out = np.ones_like(k)
            m = k > 0
            out[m] = 0.5 * k[m] ** -0.6 / np.log(k[m] + math.e)
            return out

        noise = CovarianceModel.custom(rho, hurst=0.7)
        with pytest.raises(TruncationInsufficient):
            sigma_h2(ctx_for(noise, rho_cutoff=10 ** 4))
        unchecked = ctx_for(noise, rho_cutoff=10 ** 4, sigma_tail_check=False)
        assert sigma_h2(unchecked) > 0


class TestVn2:
    def test_n1(self, ctx_fgn7):
        assert v_n2(ctx_fgn7, 1) == pytest.approx(2 * ctx_fgn7.r_cov(0) ** 2, rel=1e-15)

    def test_white_n2(self, ctx_white):
        assert v_n2(ctx_white, 2) == pytest.approx(40 / 9, rel=1e-14)

    def test_converges_fgn6(self, ctx_fgn6):
        assert abs(v_n2(ctx_fgn6, 10 ** 6) / sigma_h2(ctx_fgn6) - 1) < 0.005

    def test_increasing_towards_sigma(self, ctx_fgn7):
        vals = [v_n2(ctx_fgn7, n) for n in (10, 100, 1000, 10 ** 4)]
        assert np.all(np.diff(vals) > 0)
        assert vals[-1] < sigma_h2(ctx_fgn7)


class TestInverse:
    def test_roundtrip(self, ctx_fgn7):
        assert f_inverse(ctx_fgn7, ctx_fgn7.f(0.3)) == pytest.approx(0.3, abs=1e-10)

    def test_white(self, ctx_white):
        assert f_inverse(ctx_white, 4 / 3) == pytest.approx(0.5, abs=1e-10)

    def test_below(self, ctx_fgn7):
        with pytest.raises(BelowRange):
            f_inverse(ctx_fgn7, 0.9)

    def test_above(self, ctx_white):
        with pytest.raises(AboveRange):
            f_inverse(ctx_white, 1e9)

    @pytest.mark.parametrize("noise", NOISES + [CovarianceModel.white_noise()], ids=lambda m: m.name)
    def test_grid_roundtrip(self, noise):
        ctx = ctx_for(noise)
        worst = max(abs(ctx.f_inverse(ctx.f(t)) - t) for t in MONOTONE_GRID)
        assert worst < 1e-10

    @settings(max_examples=60, deadline=None)
    @given(t=st.floats(0.001, 0.999), guess=st.one_of(st.none(), st.floats(1e-5, 0.99999)))
    def test_residual(self, ctx_fgn7, t, guess):
        y = ctx_fgn7.f(t)
        root = ctx_fgn7.f_inverse(y, guess)
        assert abs(ctx_fgn7.f(root) - y) <= 1e-12 * max(1.0, y) or abs(root - t) < 1e-12

    def test_not_monotone(self):
        # strongly negative lag-one correlation makes f decrease near theta = 0
        def rho(k):
            k = np.abs(k)
            return np.where(k == 0, 1.0, np.where(k == 1, -0.5, 0.0))

        ctx = ctx_for(CovarianceModel.custom(rho, hurst=0.7))
        assert not ctx.monotone
        with pytest.raises(ModelNotMonotone):
            ctx.f_inverse(1.2)


class TestEstimate:
    def test_exact_moment(self, ctx_fgn7):
        n = 10
        v = np.full(n, math.sqrt(ctx_fgn7.f(0.5)))
        path = SamplePath(v, 0, "synthetic", PathKind.AR1)
        assert estimate_theta(ctx_fgn7, path) == pytest.approx(0.5, abs=1e-10)

    def test_zero_path(self, ctx_fgn7):
        with pytest.raises(BelowRange):
            estimate_theta(ctx_fgn7, np.zeros(5))

    def test_monte_carlo_accuracy(self, ctx_fgn7):
        from lmar.ar1 import generate_x_path

        errs = [abs(estimate_theta(ctx_fgn7, generate_x_path(ctx_fgn7.model, 10 ** 4, s)) - 0.5)
                for s in range(200)]
        assert np.mean(errs) < 0.05


def test_context_thread_safe(ctx_fgn7):
    from concurrent.futures import ThreadPoolExecutor

    fresh = ctx_for(CovarianceModel.fgn(0.7))
    with ThreadPoolExecutor(4) as pool:
        tables = list(pool.map(lambda k: fresh.r_table(k)[:50].copy(), [100, 5000, 20000, 300]))
    for t in tables:
        np.testing.assert_array_equal(t, ctx_fgn7.r_table(49))
