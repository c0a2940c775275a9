"""Campaign mechanics: determinism, streaming moments, normality harness."""

import math

import numpy as np
import pytest

from trigzero.errors import UsageError
from trigzero.experiments import (
    ExperimentConfig,
    IntervalSpec,
    RunningMoments,
    clt_test,
    run_campaign,
    window_chop_check,
)
from trigzero.rice import rice_mean
from trigzero.sampling import draw_coefficients
from trigzero.zeros import count_zeros_scan


def _config(**kw):
    base = dict(
        K_list=(30,),
        replicates=400,
        interval=IntervalSpec("original", 0.0, np.pi),
        alpha=0.25,
        seed=5,
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestCampaign:
    def test_degenerate_degree_one(self):
        res = run_campaign(_config(K_list=(1,), replicates=50))
        row = res.summaries[0]
        assert all(r.count == 1 for r in res.records)
        assert row.variance == 0.0

    def test_deterministic_across_worker_counts(self):
        r1 = run_campaign(_config(), workers=1)
        r3 = run_campaign(_config(), workers=3)
        assert [r.count for r in r1.records] == [r.count for r in r3.records]
        assert r1.summaries[0].mean == r3.summaries[0].mean
        assert r1.summaries[0].variance == r3.summaries[0].variance

    def test_mean_matches_rice_integral(self):
        for K in (40, 100):
            res = run_campaign(_config(K_list=(K,), replicates=3000))
            row = res.summaries[0]
            want = rice_mean(K).value
            assert abs(row.mean - want) < 4.0 * row.se_mean

    def test_mean_leading_order_at_k200(self):
        res = run_campaign(_config(K_list=(200,), replicates=4000))
        ratio = res.summaries[0].mean / (200.0 / math.sqrt(3.0))
        assert 0.99 <= ratio <= 1.01

    def test_two_degrees_two_rows(self):
        res = run_campaign(_config(K_list=(20, 40), replicates=100))
        assert [row.K for row in res.summaries] == [20, 40]
        assert len(res.records) == 200

    def test_validation(self):
        with pytest.raises(UsageError):
            run_campaign(_config(replicates=1))
        with pytest.raises(UsageError):
            run_campaign(_config(alpha=0.7, interval=IntervalSpec("window")))


class TestStreamingMoments:
    def test_matches_batch_recomputation(self):
        rng = np.random.default_rng(10)
        data = rng.normal(3.0, 2.5, size=4001)
        acc = RunningMoments()
        for chunk in np.array_split(data, 13):
            acc.push_batch(chunk)
        assert acc.n == data.size
        assert acc.mean == pytest.approx(data.mean(), rel=1e-12)
        assert acc.variance == pytest.approx(data.var(ddof=1), rel=1e-10)
        d = data - data.mean()
        skew = (d ** 3).mean() / (d ** 2).mean() ** 1.5
        kurt = (d ** 4).mean() / (d ** 2).mean() ** 2 - 3.0
        assert acc.skewness == pytest.approx(skew, rel=1e-9, abs=1e-12)
        assert acc.excess_kurtosis == pytest.approx(kurt, rel=1e-9, abs=1e-12)

    def test_merge_order_independent(self):
        rng = np.random.default_rng(1)
        data = rng.poisson(40, size=999).astype(float)
        a = RunningMoments()
        a.push_batch(data)
        b = RunningMoments()
        for chunk in np.array_split(data, 7):
            other = RunningMoments()
            other.push_batch(chunk)
            b.merge(other)
        assert b.mean == pytest.approx(a.mean, rel=1e-13)
        assert b.variance == pytest.approx(a.variance, rel=1e-11)


class TestCltHarness:
    def test_calibration_on_synthetic_normals(self):
        # feeding exact normal draws: p-values behave like a null sample
        K = 100
        passes = 0
        rng = np.random.default_rng(2025)
        for _ in range(100):
            counts = 58.0 + math.sqrt(math.pi * K) * rng.normal(size=1000)
            rep = clt_test(counts, K)
            passes += rep.p_value > 0.01
        assert passes >= 98

    def test_small_K_report_produced(self):
        res = run_campaign(_config(K_list=(10,), replicates=2000))
        rep = res.summaries[0].normality
        assert rep is not None and 0.0 <= rep.p_value <= 1.0

    def test_minimum_replicates(self):
        with pytest.raises(UsageError):
            clt_test(np.ones(100), 10)

    def test_variance_sources(self):
        rng = np.random.default_rng(0)
        counts = 100.0 + rng.normal(size=600) * 10.0
        emp = clt_test(counts, 50)
        fixed = clt_test(counts, 50, variance_source="chaos_constant", chaos_value=emp.variance_used)
        assert fixed.ks_statistic == pytest.approx(emp.ks_statistic, rel=1e-12)
        with pytest.raises(UsageError):
            clt_test(counts, 50, variance_source="chaos_constant")
        with pytest.raises(UsageError):
            clt_test(counts, 50, variance_source="bogus")


class TestWindowChop:
    def test_partition_additivity(self):
        # window plus complement counts reproduce the full-interval count
        K, alpha = 30, 0.25
        edge = (K * np.pi) ** alpha / K
        for idx in range(50):
            cv = draw_coefficients(K, "cosine", 77, idx)
            full = count_zeros_scan(cv, (0.0, np.pi), locate_roots=False).count
            left = count_zeros_scan(cv, (0.0, edge), locate_roots=False).count
            mid = count_zeros_scan(cv, (edge, np.pi - edge), locate_roots=False).count
            right = count_zeros_scan(cv, (np.pi - edge, np.pi), locate_roots=False).count
            assert left + mid + right == full

    def test_report_fields(self):
        rep = window_chop_check(100, 0.25, 300, seed=1)
        assert rep.K == 100 and rep.replicates == 300
        assert rep.ratio == pytest.approx(rep.mean_complement / math.sqrt(100 * math.pi))
        assert rep.var_complement >= 0.0

    def test_tiny_alpha_gives_tiny_ratio(self):
        rep = window_chop_check(100, 0.01, 300, seed=1)
        assert rep.ratio < 0.02

    def test_alpha_validation(self):
        with pytest.raises(UsageError):
            window_chop_check(100, 0.6, 10)
