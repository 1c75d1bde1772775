import math

import numpy as np
import pytest
from scipy import stats

from shadowspec import gfield
from shadowspec.corrfuncs import CorrelationModel, corr_matrix, eval_rho
from shadowspec.errors import (
    IllConditionedCovarianceError,
    ParameterDomainError,
    UnsupportedModelError,
)
from shadowspec.gfield import (
    DENSE_LIMIT,
    SpectralSampler,
    conditional_stats,
    factorize,
    field_sample,
    sample_field,
    shadow,
    sigma_from_db,
)

N_MC = 100_000


def _draws(factor, rng, n):
    return np.array([factor.draw(rng) for _ in range(n)])


class TestExactSampler:
    def test_nugget_uncorrelated(self, rng):
        pts = [[0.0, 1.0], [0.01, 1.0], [2.0, 0.0]]
        fac = factorize(CorrelationModel.nugget(), pts)
        assert fac.chol is None
        z = _draws(fac, rng, N_MC)
        c = np.corrcoef(z.T)
        se = 1 / math.sqrt(N_MC)
        assert np.all(np.abs(c[np.triu_indices(3, 1)]) < 3 * se)

    def test_pair_correlation(self, rng):
        s, r = 0.2, 0.1
        fac = factorize(CorrelationModel.exponential(s), [[1.0, 0.0], [1.0 + r, 0.0]])
        z = _draws(fac, rng, N_MC)
        rho = math.exp(-r / s)
        se = (1 - rho**2) / math.sqrt(N_MC)
        assert abs(np.corrcoef(z.T)[0, 1] - rho) < 3 * se

    def test_single_point_standard_normal(self, rng):
        fac = factorize(CorrelationModel.exponential(1.0), [[1.0, 1.0]])
        z = _draws(fac, rng, N_MC).ravel()
        d = stats.kstest(z, "norm").statistic
        # asymptotic 1% critical value of the KS statistic
        assert d < 1.628 / math.sqrt(N_MC)

    def test_reuse_is_deterministic(self):
        pts = np.random.default_rng(0).uniform(-1, 1, (30, 2))
        fac = factorize(CorrelationModel.matern(0.3, 1.5), pts)
        a = sample_field(None, pts, np.random.default_rng(5), factor=fac)
        b = sample_field(CorrelationModel.matern(0.3, 1.5), pts, np.random.default_rng(5))
        assert np.array_equal(a, b)

    @staticmethod
    def _smooth_line():
        # dense points under a very smooth kernel: numerically singular
        x = 1.0 + 0.1 * np.arange(1, 41)
        return np.column_stack([x, np.zeros_like(x)])

    def test_ridge_event(self):
        fac = factorize(CorrelationModel.squared_exponential(1.0), self._smooth_line())
        assert fac.ridge == 1e-10

    def test_ridge_exhausted(self, monkeypatch):
        monkeypatch.setattr(gfield, "RIDGES", (0.0,))
        with pytest.raises(IllConditionedCovarianceError) as info:
            factorize(CorrelationModel.squared_exponential(1.0), self._smooth_line())
        assert info.value.min_eigenvalue < 1e-12

    def test_dense_limit(self):
        pts = np.column_stack([np.arange(1, DENSE_LIMIT + 2, dtype=float), np.zeros(DENSE_LIMIT + 1)])
        with pytest.raises(ParameterDomainError):
            factorize(CorrelationModel.exponential(0.1), pts)


class TestShadow:
    def test_substitution(self):
        assert shadow(0.0, 2.0, 4.0) == pytest.approx(math.exp(-1))

    def test_moment_identity(self, rng):
        sigma, beta = math.log(10), 3.6
        s = shadow(rng.standard_normal(N_MC), sigma, beta)
        v = s ** (2 / beta)
        assert abs(v.mean() - 1) < 3 * v.std(ddof=1) / math.sqrt(N_MC)

    def test_db_conversion(self):
        assert sigma_from_db(10) == pytest.approx(math.log(10), rel=1e-15)

    def test_field_sample(self):
        fs = field_sample([0.0, 1.0], 2.0, 4.0, source="test")
        assert fs.s[0] == pytest.approx(math.exp(-1)) and fs.meta["source"] == "test"

    @pytest.mark.parametrize("sigma,beta", [(0.0, 4.0), (1.0, 2.0)])
    def test_invalid(self, sigma, beta):
        with pytest.raises(ParameterDomainError):
            shadow(0.0, sigma, beta)


class TestSpectralSampler:
    @pytest.mark.parametrize("model", [
        CorrelationModel.exponential(0.3),
        CorrelationModel.matern(0.3, 1.5),
        CorrelationModel.squared_exponential(0.3),
    ])
    def test_covariance(self, model, rng):
        pts = np.array([[0.0, 0.0], [0.2, 0.0], [0.0, 0.5], [0.7, 0.7]])
        sampler = SpectralSampler(model, n_features=200)
        z = np.array([sampler.draw(pts, rng) for _ in range(20_000)])
        emp = np.cov(z.T)
        ref = corr_matrix(model, pts)
        assert np.abs(emp - ref).max() < 0.05

    def test_wendland_unsupported(self):
        with pytest.raises(UnsupportedModelError):
            SpectralSampler(CorrelationModel.wendland(1.0))


class TestConditional:
    def test_empty(self):
        assert conditional_stats(CorrelationModel.exponential(1.0), [[1.0, 0.0]], 0, [], []) == (0.0, 1.0)

    def test_one_point(self):
        m = CorrelationModel.exponential(0.5)
        pts = [[1.0, 0.0], [1.3, 0.4]]
        c = eval_rho(m, 0.5)
        mu, tau = conditional_stats(m, pts, 0, [1], [0.7])
        assert mu == pytest.approx(c * 0.7, rel=1e-13)
        assert tau == pytest.approx(1 - c * c, rel=1e-13)

    def test_regression_oracle(self, rng):
        m = CorrelationModel.matern(0.4, 1.5)
        for _ in range(20):
            pts = rng.uniform(-1, 1, (11, 2))
            z = rng.standard_normal(10)
            mu, tau = conditional_stats(m, pts, 0, range(1, 11), z)
            S = corr_matrix(m, pts)
            # Gaussian conditioning from the joint precision matrix
            P = np.linalg.inv(S)
            assert mu == pytest.approx(-(P[0, 1:] @ z) / P[0, 0], abs=1e-8)
            assert tau == pytest.approx(1 / P[0, 0], abs=1e-8)

    def test_rejects_self(self):
        with pytest.raises(ParameterDomainError):
            conditional_stats(CorrelationModel.exponential(1.0), [[1, 0], [2, 0]], 0, [0], [0.0])
