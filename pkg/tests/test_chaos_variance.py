"""Chaos variance constants: analytic oracle, decay, and Monte Carlo tie."""

import math

import numpy as np
import pytest

from trigzero.chaos_variance import (
    chaos_lag_correlation,
    lag_correlations,
    sigma_q_squared,
    total_variance_constant,
)
from trigzero.covariance import sinc_derivs
from trigzero.errors import UsageError
from trigzero.experiments import ExperimentConfig, IntervalSpec, run_campaign
from trigzero.hermite import HermiteBasis, chaos_coefficients


class TestLagCorrelations:
    def test_value_correlation_vanishes_at_pi(self):
        rzz, _, _, _ = lag_correlations(np.pi)
        assert rzz == pytest.approx(0.0, abs=1e-16)

    def test_decay(self):
        taus = np.geomspace(10.0, 1e5, 40)
        for rho in lag_correlations(taus):
            assert np.all(np.abs(rho) <= 3.2 / taus)

    def test_gram_positive_semidefinite(self):
        rng = np.random.default_rng(4)
        for tau in rng.uniform(0.05, 50.0, size=50):
            rzz, rzw, rwz, rww = lag_correlations(tau)
            gram = np.array(
                [
                    [1, 0, rzz, rzw],
                    [0, 1, rwz, rww],
                    [rzz, rwz, 1, 0],
                    [rzw, rww, 0, 1],
                ]
            )
            assert np.linalg.eigvalsh(gram)[0] >= -1e-10

    def test_positive_lag_required(self):
        with pytest.raises(UsageError):
            lag_correlations(0.0)


class TestChaosLagCorrelation:
    def test_even_in_lag(self):
        taus = np.array([0.3, 1.1, 4.0, 9.7])
        for q in (2, 4, 6):
            assert np.allclose(
                chaos_lag_correlation(q, taus),
                chaos_lag_correlation(q, -taus),
                atol=1e-12,
            )

    def test_regular_at_zero(self):
        for q in (2, 4):
            val0 = chaos_lag_correlation(q, np.array([0.0]))[0]
            val_eps = chaos_lag_correlation(q, np.array([1e-6]))[0]
            assert np.isfinite(val0)
            assert val0 == pytest.approx(val_eps, rel=1e-6)

    def test_q2_closed_form(self):
        # G_2 = (sinc^2 + 9 sinc''^2 - 6 sinc'^2) / (2 pi^2)
        taus = np.linspace(0.1, 30.0, 200)
        s0, s1, s2 = sinc_derivs(taus)
        want = (s0 ** 2 + 9.0 * s2 ** 2 - 6.0 * s1 ** 2) / (2.0 * np.pi ** 2)
        assert np.allclose(chaos_lag_correlation(2, taus), want, atol=1e-14)

    def test_inverse_square_envelope(self):
        # |G_q(tau)| <= C / tau^2 on [10, 1e4] with C fitted on the first
        # decade; the per-decade envelope never grows (orders above 2 decay
        # even faster, so their envelopes shrink)
        for q in (2, 3, 4, 5, 6):
            envelopes = []
            for dec in range(3):
                taus = np.geomspace(10.0 ** (dec + 1), 10.0 ** (dec + 2), 2000)
                envelopes.append(float(np.max(np.abs(chaos_lag_correlation(q, taus)) * taus ** 2)))
            if all(e == 0.0 for e in envelopes):  # odd orders vanish
                continue
            c_fit = envelopes[0]
            assert all(e <= 1.05 * c_fit for e in envelopes)
            assert all(b <= 1.05 * a for a, b in zip(envelopes, envelopes[1:]))
        # the order-2 envelope is the exact 1/tau^2 carrier: stable per decade
        env2 = []
        for dec in range(3):
            taus = np.geomspace(10.0 ** (dec + 1), 10.0 ** (dec + 2), 2000)
            env2.append(float(np.max(np.abs(chaos_lag_correlation(2, taus)) * taus ** 2)))
        assert max(env2) / min(env2) < 1.01

    def test_against_quadrature_at_fixed_lags(self):
        # sign conventions of the derivative pairing: diagram sum vs a 4-D
        # Gauss-Hermite expectation of the actual integrand product
        x, w = np.polynomial.hermite.hermgauss(20)
        x = x * math.sqrt(2.0)
        w = w / math.sqrt(math.pi)
        grids = np.meshgrid(x, x, x, x, indexing="ij")
        pts = np.stack([g.ravel() for g in grids])
        wg = np.meshgrid(w, w, w, w, indexing="ij")
        weights = (wg[0] * wg[1] * wg[2] * wg[3]).ravel()
        coeffs = chaos_coefficients(6)
        basis = HermiteBasis(6)
        for tau in (0.7, 2.2):
            rzz, rzw, rwz, rww = lag_correlations(tau)
            gram = np.array(
                [
                    [1, 0, rzz, rzw],
                    [0, 1, rwz, rww],
                    [rzz, rwz, 1, 0],
                    [rzw, rww, 0, 1],
                ]
            )
            chol = np.linalg.cholesky(gram + 1e-13 * np.eye(4))
            z1, w1, z2, w2 = chol @ pts
            for q in (2, 4):
                integrand = np.zeros(z1.shape)
                integrand2 = np.zeros(z1.shape)
                for ell, coef in coeffs.fq_grid[q]:
                    # normalized weights as used by the variance assembly
                    k = q - 2 * ell
                    from trigzero.hermite import abs_coeff, dirac_coeff_normalized

                    cnorm = dirac_coeff_normalized(k) * abs_coeff(ell)
                    integrand += cnorm * basis.eval(k, z1) * basis.eval(2 * ell, w1)
                    integrand2 += cnorm * basis.eval(k, z2) * basis.eval(2 * ell, w2)
                quad_val = float(weights @ (integrand * integrand2))
                diagram = float(chaos_lag_correlation(q, np.array([tau]))[0])
                assert abs(quad_val - diagram) < 1e-4


class TestSigmaQ:
    def test_order_one_exactly_zero(self):
        term = sigma_q_squared(1)
        assert term.sigma_sq == 0.0

    def test_odd_orders_zero(self):
        for q in (3, 5, 7, 11):
            assert sigma_q_squared(q).sigma_sq == 0.0

    def test_q2_analytic_value(self):
        # Parseval on the q = 2 lag correlation gives exactly 2/(15 pi)
        term = sigma_q_squared(2, tail=1e4)
        assert term.sigma_sq == pytest.approx(2.0 / (15.0 * np.pi), abs=1e-6)

    def test_nonnegative(self):
        for q in range(1, 13):
            assert sigma_q_squared(q, tail=300.0).sigma_sq >= -1e-10

    def test_validation(self):
        with pytest.raises(UsageError):
            sigma_q_squared(0)
        with pytest.raises(UsageError):
            sigma_q_squared(2, tail=50.0)
        with pytest.raises(UsageError):
            sigma_q_squared(8, chaos_coefficients(4))


class TestTotal:
    def test_band_and_stability(self, chaos_total):
        assert 0.084 <= chaos_total.total <= 0.094
        vc10 = total_variance_constant(q_max=10, tail=1e4)
        assert abs(chaos_total.total - vc10.total) < 1e-3

    def test_leading_partial_sum_positive(self):
        vc = total_variance_constant(q_max=2, tail=500.0)
        assert vc.total > 0.0

    def test_monte_carlo_cross_validation(self, chaos_total):
        # the assembled constant must predict the simulated variance slope of
        # the finite-degree stationary ensemble
        K, reps = 500, 4000
        cfg = ExperimentConfig(
            K_list=(K,),
            replicates=reps,
            interval=IntervalSpec("original", 0.0, np.pi),
            alpha=0.25,
            seed=1900,
            ensemble="stationary",
        )
        row = run_campaign(cfg).summaries[0]
        kpi = K * np.pi
        assert abs(row.variance / kpi - chaos_total.total) < 4.0 * row.se_var / kpi, (
            row.variance / kpi,
            chaos_total.total,
        )

    def test_validation(self):
        with pytest.raises(UsageError):
            total_variance_constant(q_max=1)
