import mpmath as mp
import numpy as np
import pytest

from mitest.calculus import mi_hessian, multinomial_cov
from mitest.errors import MITestError, NegativeWeightError, SeriesConvergenceError
from mitest.nulldist import (ChiBarWeights, cdf, chi_bar_weights, null_weights, pvalue, pvalue_details,
                             quantile, sample, sf)
from mitest.table import ProbTable

from conftest import random_dims, random_product

UNIT1 = ChiBarWeights([1.0, 0.0, 0.0])
UNIT16 = ChiBarWeights([1.0] * 16)


def chi2_cdf(k, x):
    return float(mp.gammainc(mp.mpf(k) / 2, 0, mp.mpf(x) / 2, regularized=True))


def chi2_quantile(k, level):
    return float(mp.findroot(lambda x: mp.gammainc(mp.mpf(k) / 2, 0, x / 2, regularized=True) - level,
                             mp.mpf(k)))


def two_weight_cdf(a, b, x):
    """P(a X + b Y <= x) for independent chi2_1 X, Y by quadrature."""
    mp.mp.dps = 30
    f = lambda u: mp.exp(-u / 2) / mp.sqrt(2 * mp.pi * u)
    g = lambda u: mp.erf(mp.sqrt(max((x - a * u) / b, 0) / 2))
    return float(mp.quad(lambda u: f(u) * g(u), [0, x / (2 * a), x / a]))


class TestWeights:
    def test_uniform_2x2(self):
        p = ProbTable(np.full((2, 2), 0.25))
        w = chi_bar_weights(mi_hessian(p), multinomial_cov(p))
        np.testing.assert_allclose(w.lambdas, [1, 0, 0], atol=1e-12)
        assert w.trace == pytest.approx(1.0, abs=1e-12)

    def test_uniform_5x5(self):
        w = null_weights(ProbTable(np.full((5, 5), 0.04)))
        np.testing.assert_allclose(w.lambdas[:16], 1.0, atol=1e-8)
        np.testing.assert_allclose(w.lambdas[16:], 0.0, atol=1e-8)
        assert w.unit_dof() == 16

    def test_identity(self):
        w = chi_bar_weights(np.eye(4), np.eye(4))
        np.testing.assert_array_equal(w.lambdas, 1.0)

    def test_trace_identity_on_product_tables(self, rng):
        for _ in range(30):
            ni, nj = random_dims(rng)
            w = null_weights(random_product(rng, ni, nj))
            assert abs(w.lambdas.sum() - w.trace) <= 1e-9
            assert w.unit_dof() == (ni - 1) * (nj - 1)

    def test_not_positive_definite(self):
        with pytest.raises(MITestError):
            chi_bar_weights(np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_sorted_and_clamped(self):
        w = ChiBarWeights([0.5, 1e-12, 2.0, -0.3])
        np.testing.assert_array_equal(w.lambdas, [2.0, 0.5, 0.0, -0.3])
        assert w.has_negative

    def test_grouping(self):
        w = ChiBarWeights([1.0, 1.0 + 1e-12, 2.0, 0.0])
        assert w.groups() == ((2.0, 1), (1.0 + 1e-12, 2))


class TestCdf:
    @pytest.mark.parametrize("k", [1, 3, 16])
    def test_unit_weights(self, k):
        w = ChiBarWeights([1.0] * k)
        for x in (0.3, k, 2.5 * k):
            assert cdf(w, x) == pytest.approx(chi2_cdf(k, x), abs=1e-10)

    def test_fixture_value(self):
        assert cdf(UNIT1, 3.8415) == pytest.approx(0.950001227928778, abs=1e-12)

    def test_zero(self):
        assert cdf(ChiBarWeights([0.7, 2.0]), 0.0) == 0.0

    def test_scaling(self):
        assert cdf(ChiBarWeights([2.0]), 2 * 3.8415) == pytest.approx(cdf(UNIT1, 3.8415), abs=1e-14)

    @pytest.mark.parametrize("a,b", [(2.0, 0.5), (1.0, 0.1), (3.0, 2.9)])
    def test_two_weights_against_quadrature(self, a, b):
        w = ChiBarWeights([a, b])
        for x in (0.5, 2.0, 6.0, 15.0):
            assert cdf(w, x) == pytest.approx(two_weight_cdf(a, b, x), abs=1e-9)

    def test_vectorized_and_monotone(self):
        w = ChiBarWeights([2.5, 1.0, 0.4, 0.4, 0.1])
        xs = np.linspace(0, 60, 200)
        f = cdf(w, xs)
        assert f.shape == xs.shape
        assert np.all(np.diff(f) >= -1e-12)
        # the 2.5 * chi2_1 component alone leaves ~3e-5 beyond mean + 10 sd
        assert cdf(w, w.mean + 10 * np.sqrt(w.variance)) > 1 - 1e-4
        assert cdf(w, 200.0) == pytest.approx(1.0, abs=1e-10)

    def test_sf_complements_cdf(self):
        w = ChiBarWeights([2.5, 1.0, 0.4])
        xs = np.array([0.1, 1.0, 5.0, 20.0])
        np.testing.assert_allclose(sf(w, xs) + cdf(w, xs), 1.0, atol=1e-9)
        # far tail keeps relative precision
        assert sf(UNIT1, 83.178) == pytest.approx(float(mp.gammainc(0.5, 83.178 / 2, mp.inf, regularized=True)),
                                                  rel=1e-9)

    def test_negative_weight_rejected(self):
        with pytest.raises(NegativeWeightError):
            cdf(ChiBarWeights([1.0, -0.5]), 1.0)

    def test_iteration_cap(self):
        with pytest.raises(SeriesConvergenceError):
            cdf(ChiBarWeights([100.0, 0.01]), 1.0, tol=1e-12, max_terms=10)

    def test_tolerance_range(self):
        with pytest.raises(MITestError):
            cdf(UNIT1, 1.0, tol=0.1)


class TestSample:
    def test_mean_unit(self):
        d = sample(UNIT1, 10**6, seed=1)
        assert abs(d.mean() - 1) <= 3 * np.sqrt(2 / 10**6)

    def test_moments_16(self):
        m = 200_000
        d = sample(UNIT16, m, seed=2)
        assert abs(d.mean() - 16) <= 5 * np.sqrt(32 / m)
        # var of the sample variance of chi2_16: (mu4 - sigma^4) / m, mu4 = 3*32^2 + 48*16
        assert abs(d.var() - 32) <= 5 * np.sqrt((3 * 32**2 + 48 * 16 - 32**2) / m)

    def test_deterministic(self):
        np.testing.assert_array_equal(sample(UNIT16, 1000, 5), sample(UNIT16, 1000, 5))
        assert not np.array_equal(sample(UNIT16, 1000, 5), sample(UNIT16, 1000, 6))

    def test_independent_of_workers(self):
        a = sample(ChiBarWeights([2.0, 1.0, -0.5]), 150_000, 9, workers=1)
        b = sample(ChiBarWeights([2.0, 1.0, -0.5]), 150_000, 9, workers=3)
        np.testing.assert_array_equal(a, b)


class TestQuantilePvalue:
    def test_quantiles(self):
        assert quantile(UNIT1, 0.95) == pytest.approx(chi2_quantile(1, 0.95), abs=1e-8)
        assert quantile(UNIT1, 0.95) == pytest.approx(3.8415, abs=1e-4)
        assert quantile(UNIT16, 0.95) == pytest.approx(26.296, abs=1e-3)
        assert quantile(ChiBarWeights([1.0]), 0.5) == pytest.approx(0.4549, abs=1e-4)

    @pytest.mark.parametrize("level", [0.5, 0.9, 0.95, 0.99])
    def test_quantile_inverts_cdf(self, level):
        w = ChiBarWeights([3.0, 1.2, 1.2, 0.3])
        assert cdf(w, quantile(w, level)) == pytest.approx(level, abs=1e-6)

    def test_mc_quantile(self):
        q = quantile(UNIT1, 0.95, method="mc", seed=4)
        assert q == pytest.approx(3.8415, abs=0.05)

    def test_pvalues(self):
        assert pvalue(UNIT1, 0.0) == 1.0
        assert pvalue(UNIT1, 3.8415) == pytest.approx(0.05, abs=1e-4)
        assert pvalue(UNIT16, 26.296) == pytest.approx(0.05, abs=1e-3)

    def test_mc_pvalue_add_one(self):
        p = pvalue(UNIT1, 1e6, method="mc", seed=1, draws=999)
        assert p == pytest.approx(1 / 1000)

    def test_mc_needs_seed(self):
        with pytest.raises(MITestError):
            pvalue(UNIT1, 1.0, method="mc")

    def test_negative_weights_route_to_mc(self):
        w = ChiBarWeights([1.0, -0.2])
        res = pvalue_details(w, 2.0, seed=3)
        assert res.method == "mc"
        with pytest.raises(NegativeWeightError):
            pvalue(w, 2.0)

    def test_series_fallback_flagged(self, monkeypatch):
        import mitest.nulldist as nd
        monkeypatch.setattr(nd, "MAX_TERMS", 3)
        monkeypatch.setattr(nd, "_check_series", lambda w, tol, cap=3: (_ for _ in ()).throw(
            SeriesConvergenceError("cap")))
        res = nd.pvalue_details(ChiBarWeights([50.0, 0.01]), 5.0)
        assert res.method == "mc" and "fallback" in res.note

    def test_pvalue_monotone(self):
        w = ChiBarWeights([2.0, 1.0, 0.5])
        ps = [pvalue(w, t) for t in np.linspace(0, 30, 40)]
        assert all(a >= b for a, b in zip(ps, ps[1:]))
