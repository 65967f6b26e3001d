import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from taraarch.baselines import (
    CannedSpec,
    EgarchParams,
    GarchParams,
    arch_variance,
    black_scholes_price,
    canned_model_spec,
    canned_specs,
    egarch_log_variance,
    egarch_shock_response,
    garch_variance,
    tar_arch_full_qmle,
)
from taraarch.estimation import gaussian_qll
from taraarch.model import (
    AarchParams,
    ModelSpec,
    TarParams,
    ThresholdPartition,
    variance_path,
)
from taraarch.montecarlo import symmetric_reference_spec
from taraarch.simulate import SimConfig, normal_stream, simulate_path


def bs_quadrature(spot, strike, rate, sigma, tau):
    """Risk-neutral expectation of the discounted payoff, by quadrature.

    Integrates over the in-the-money region only so quad never sees the
    payoff kink (adaptive quadrature can silently lose accuracy there).
    """
    drift = (rate - 0.5 * sigma**2) * tau
    vol = sigma * math.sqrt(tau)
    z0 = max((math.log(strike / spot) - drift) / vol, -40.0)

    def payoff(z):
        return (spot * math.exp(drift + vol * z) - strike) * norm.pdf(z)

    val, _ = quad(payoff, z0, z0 + 45.0, limit=400, epsabs=1e-13, epsrel=1e-13)
    return math.exp(-rate * tau) * val


class TestArchVariance:
    def test_constant_when_coefficients_zero(self):
        h = arch_variance(0.3, np.zeros(2), np.array([1.0, -2.0, 3.0]))
        np.testing.assert_allclose(h, 0.3, atol=0)

    def test_hand_value(self):
        h = arch_variance(0.1, np.array([0.4]), np.array([2.0, 0.0]))
        assert h[1] == pytest.approx(1.7, abs=1e-15)

    def test_matches_asymmetric_recursion_with_sqrt_coefficients(self):
        rng = np.random.Generator(np.random.Philox(key=2))
        e = rng.normal(size=200)
        h_arch = arch_variance(0.2, np.array([0.36, 0.04]), e)
        aarch = AarchParams(0.2, np.array([0.6, 0.2]), np.zeros(2))
        np.testing.assert_allclose(h_arch, variance_path(aarch, e, 0.0), atol=1e-12)

    def test_rejects_negative_coefficients(self):
        with pytest.raises(ValueError):
            arch_variance(0.1, np.array([-0.2]), np.array([1.0]))


class TestGarchVariance:
    def test_beta_zero_reduces_to_arch(self):
        e = np.array([0.5, -1.5, 2.5, 0.1])
        params = GarchParams(0.2, np.array([0.3]), np.array([0.0]))
        np.testing.assert_allclose(
            garch_variance(params, e, 1.0),
            arch_variance(0.2, np.array([0.3]), e),
            atol=1e-15,
        )

    def test_fixed_point_with_zero_shocks(self):
        params = GarchParams(0.05, np.array([0.1]), np.array([0.85]))
        h = garch_variance(params, np.zeros(400), presample_h=1.0)
        assert h[0] == pytest.approx(0.05 + 0.85, abs=1e-15)
        assert h[-1] == pytest.approx(0.05 / 0.15, rel=1e-9)

    def test_long_run_sample_variance_matches_unconditional(self):
        alpha0, a1, b1 = 0.05, 0.08, 0.82
        z = normal_stream(31337, 200_000)
        h_prev = alpha0 / (1 - a1 - b1)
        e_prev = 0.0
        e = np.empty(z.size)
        for t in range(z.size):
            h_t = alpha0 + a1 * e_prev**2 + b1 * h_prev
            e[t] = z[t] * math.sqrt(h_t)
            e_prev, h_prev = e[t], h_t
        target = alpha0 / (1 - a1 - b1)
        assert abs(e.var() - target) / target < 0.10

    def test_stationarity_flag(self):
        assert GarchParams(0.1, np.array([0.1]), np.array([0.8])).is_stationary
        assert not GarchParams(0.1, np.array([0.3]), np.array([0.8])).is_stationary


class TestEgarch:
    def test_noise_free_recursion_is_ar1(self):
        params = EgarchParams(gamma0=0.2, gamma1=0.5, omega=0.0, lam=0.0)
        logh = egarch_log_variance(params, np.zeros(200), presample_logh=1.0)
        expected = 1.0
        for t in range(5):
            expected = 0.2 + 0.5 * expected
            assert logh[t] == pytest.approx(expected, abs=1e-14)
        assert logh[-1] == pytest.approx(0.4, abs=1e-12)

    def test_news_term_centered_at_mean_absolute_shock(self):
        params = EgarchParams(0.0, 0.0, omega=0.0, lam=1.0)
        assert egarch_shock_response(params, math.sqrt(2 / math.pi)) == pytest.approx(
            0.0, abs=1e-15
        )

    def test_news_term_hand_value_against_quadrature(self):
        mean_abs, _ = quad(lambda x: abs(x) * norm.pdf(x), -12, 12)
        params = EgarchParams(0.0, 0.0, omega=0.1, lam=0.2)
        got = egarch_shock_response(params, 1.0)
        assert got == pytest.approx(0.1 + 0.2 * (1.0 - mean_abs), abs=1e-9)
        assert got == pytest.approx(0.14042, abs=1e-5)

    def test_variances_positive_by_exponentiation(self):
        params = EgarchParams(0.1, 0.9, omega=-0.3, lam=0.4)
        z = normal_stream(5, 1000)
        logh = egarch_log_variance(params, z, presample_logh=0.0)
        assert np.all(np.exp(logh) > 0)


class TestCannedSpecs:
    def test_lynx_digits(self):
        lynx = canned_specs()[0]
        assert lynx.name == "lynx"
        np.testing.assert_array_equal(
            lynx.tar.coefficients,
            np.array([[0.62, 1.25, -0.43], [2.25, 1.52, -1.24]]),
        )
        assert lynx.partition.delay == 2
        assert lynx.partition.thresholds[0] == 3.25
        assert lynx.noise_sd == (0.2, 0.25)

    def test_sunspot_digits(self):
        sunspot = canned_specs()[1]
        assert sunspot.partition.delay == 8
        assert sunspot.partition.thresholds[0] == 11.9824
        low = sunspot.tar.coefficients[0]
        np.testing.assert_array_equal(
            low,
            [1.9191, 0.8416, 0.0728, -0.3153, 0.1479, -1.985, -0.0005, 0.1875,
             -0.2701, 0.2116, 0.0091, 0.0873],
        )
        np.testing.assert_array_equal(
            sunspot.tar.coefficients[1][:4], [4.2746, 1.4431, -0.8408, 0.0554]
        )

    def test_model_spec_embedding(self):
        spec = canned_model_spec("lynx")
        assert spec.aarch.alpha0 == pytest.approx(0.04)
        assert spec.p == 2 and spec.q == 1
        with pytest.raises(KeyError):
            canned_model_spec("nope")


class TestBlackScholes:
    def test_zero_strike_is_spot(self):
        assert black_scholes_price(100.0, 0.0, 0.05, 0.2, 1.0) == 100.0

    def test_vanishing_volatility_limit(self):
        price = black_scholes_price(100.0, 90.0, 0.0, 1e-12, 1.0)
        assert price == pytest.approx(10.0, abs=1e-6)
        worthless = black_scholes_price(80.0, 90.0, 0.0, 1e-12, 1.0)
        assert worthless == pytest.approx(0.0, abs=1e-6)

    def test_at_the_money_value(self):
        price = black_scholes_price(100.0, 100.0, 0.0, 0.2, 1.0)
        assert price == pytest.approx(7.965567455405804, abs=1e-9)
        assert price == pytest.approx(bs_quadrature(100, 100, 0.0, 0.2, 1.0), abs=1e-8)

    def test_monotone_in_sigma_spot_strike(self):
        sigmas = np.linspace(0.05, 0.8, 12)
        prices = [black_scholes_price(100, 95, 0.02, s, 0.7) for s in sigmas]
        assert np.all(np.diff(prices) > 0)
        spots = np.linspace(60, 140, 12)
        prices = [black_scholes_price(s, 95, 0.02, 0.3, 0.7) for s in spots]
        assert np.all(np.diff(prices) > 0)
        strikes = np.linspace(60, 140, 12)
        prices = [black_scholes_price(100, k, 0.02, 0.3, 0.7) for k in strikes]
        assert np.all(np.diff(prices) < 0)

    def test_domain_violations(self):
        with pytest.raises(ValueError):
            black_scholes_price(-1.0, 100, 0.0, 0.2, 1.0)
        with pytest.raises(ValueError):
            black_scholes_price(100, 100, 0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            black_scholes_price(100, 100, 0.0, 0.2, 0.0)
        with pytest.raises(ValueError):
            black_scholes_price(100, -5.0, 0.0, 0.2, 1.0)


class TestFullQmle:
    def test_degenerate_case_recovers_moments(self):
        spec = ModelSpec(
            p=0,
            q=1,
            partition=ThresholdPartition.single_regime(),
            tar=TarParams(np.array([[0.3]])),
            aarch=AarchParams(0.5, np.zeros(1), np.zeros(1)),
        )
        sim = simulate_path(spec, SimConfig(n=20_000, seed=10))
        report = tar_arch_full_qmle(sim.series, spec.partition, 0, 1)
        x = sim.series.values
        e = x - x.mean()
        assert report.spec.tar.coefficients[0, 0] == pytest.approx(x.mean(), abs=0.02)
        assert report.spec.aarch.alpha0 == pytest.approx(np.mean(e * e), rel=0.05)

    def test_ascent_from_truth(self):
        spec = symmetric_reference_spec()
        sim = simulate_path(spec, SimConfig(n=3000, seed=44))
        report = tar_arch_full_qmle(sim.series, spec.partition, spec.p, spec.q, init=spec)
        assert report.qll >= gaussian_qll(spec, sim.series) - 1e-9

    def test_trace_monotone(self):
        spec = symmetric_reference_spec()
        sim = simulate_path(spec, SimConfig(n=2000, seed=45))
        report = tar_arch_full_qmle(sim.series, spec.partition, spec.p, spec.q)
        assert np.all(np.diff(report.trace) >= -1e-9)

    def test_betas_identically_zero(self):
        spec = symmetric_reference_spec()
        sim = simulate_path(spec, SimConfig(n=2000, seed=46))
        report = tar_arch_full_qmle(sim.series, spec.partition, spec.p, spec.q)
        np.testing.assert_array_equal(report.spec.aarch.betas, np.zeros(1))

    def test_three_se_coverage_over_replicates(self, efficiency_pair):
        _, _, _, res_full = efficiency_pair
        rows = [r for r in res_full.rows if r.converged][:200]
        est = np.vstack([r.estimates for r in rows])
        ses = np.vstack([r.std_errors for r in rows])
        inside = np.abs(est - res_full.truth) <= 3 * ses
        assert inside.mean(axis=0).min() >= 0.95

    def test_score_norm_at_optimum(self):
        # rebuild the frozen-backcast objective from public primitives and
        # finite-difference it at the returned optimum, in the optimizer's
        # (log-transformed, per-observation) coordinates
        from taraarch.estimation import theta_step
        from taraarch.model import residuals as model_residuals

        spec = symmetric_reference_spec()
        sim = simulate_path(spec, SimConfig(n=3000, seed=47))
        x = sim.series.values
        report = tar_arch_full_qmle(sim.series, spec.partition, spec.p, spec.q)

        flat = AarchParams(1.0, np.zeros(1), np.zeros(1))
        tar0 = theta_step(x, spec.partition, flat, TarParams(np.zeros((2, 2))))
        ph = float(model_residuals(
            ModelSpec(p=1, q=1, partition=spec.partition, tar=tar0, aarch=flat), x
        ).var())
        m = spec.presample_length
        nq = x.size - m
        o = m - spec.mean_lag_length

        def mean_negative_qll(u):
            tar = TarParams(u[:4].reshape(2, 2))
            aarch = AarchParams(math.exp(u[4]), np.array([math.exp(u[5])]), np.zeros(1))
            probe = ModelSpec(p=1, q=1, partition=spec.partition, tar=tar, aarch=aarch)
            e = model_residuals(probe, x)
            h = variance_path(aarch, e, ph)
            eq, hq = e[o:], h[o:]
            return 0.5 * float(np.sum(np.log(hq) + eq * eq / hq)) / nq

        est = report.spec
        u = np.concatenate(
            [
                est.tar.coefficients.ravel(),
                [math.log(est.aarch.alpha0), math.log(est.aarch.alphas[0])],
            ]
        )
        grad = np.empty(u.size)
        for i in range(u.size):
            step = 1e-6 * (1.0 + abs(u[i]))
            up, dn = u.copy(), u.copy()
            up[i] += step
            dn[i] -= step
            grad[i] = (mean_negative_qll(up) - mean_negative_qll(dn)) / (2 * step)
        assert np.max(np.abs(grad)) < 1e-6


def test_canned_spec_type_fields():
    lynx = canned_specs()[0]
    assert isinstance(lynx, CannedSpec)
    assert lynx.source
    sun = canned_specs()[1]
    assert sun.noise_sd is None
    assert sun.model_spec().aarch.alpha0 == 1.0
