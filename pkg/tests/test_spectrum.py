import math

import numpy as np
import pytest
from scipy import special

from shadowspec.corrfuncs import CorrelationModel
from shadowspec.errors import ParameterDomainError
from shadowspec.gfield import factorize, field_sample, shadow
from shadowspec.placement import PlacementKind, PointConfig, explicit_config, gen_hex_grid, gen_poisson
from shadowspec.spectrum import (
    PropagationParams,
    Q,
    b_of,
    b_of_r,
    gauss_expect_identities,
    h_of,
    log_Q,
    marginal_prob,
    marginal_prob_r,
    mean_measure_det,
    mean_measure_limit,
    mean_measure_poisson_disc,
    mills_bounds,
    mills_ratio,
    normalized_threshold,
    pathloss,
    radial_integral_to_inf,
    realize_spectrum,
    threshold_from_dbm,
    transition_radius,
)

SIGMA = math.log(10)
NET = PropagationParams(4000.0, 3.6, SIGMA, 5.0)


class TestParams:
    @pytest.mark.parametrize("kw", [dict(K=0.0), dict(beta=2.0), dict(sigma=-1.0), dict(kappa=0.0)])
    def test_invalid(self, kw):
        base = dict(K=1.0, beta=4.0, sigma=1.0, kappa=1.0)
        base.update(kw)
        with pytest.raises(ParameterDomainError):
            PropagationParams(**base)


class TestPathLoss:
    def test_unit(self):
        assert h_of(PropagationParams(1.0, 4.0, 1.0), 1.0) == 1.0

    def test_metre(self):
        assert h_of(NET, 0.001) == pytest.approx(4**3.6, rel=1e-14)
        assert 4**3.6 == pytest.approx(147.03, abs=0.005)

    def test_monotone(self):
        r = np.geomspace(1e-4, 1e3, 500)
        assert np.all(np.diff(h_of(NET, r)) >= 0)

    def test_pathloss_points(self):
        assert pathloss(PropagationParams(1.0, 4.0, 1.0), [[3.0, 4.0]]) == pytest.approx([625.0])

    def test_origin(self):
        with pytest.raises(ParameterDomainError):
            h_of(NET, 0.0)


class TestB:
    def test_equal(self):
        p = PropagationParams(1.0, 4.0, 2.0)
        assert b_of(p, 3.0, 3.0) == pytest.approx(0.5)

    def test_arithmetic(self):
        p = PropagationParams(1.0, 4.0, 2.0)
        assert b_of(p, math.e**2, 1.0) == pytest.approx(1.5)

    def test_monotone(self):
        g = np.geomspace(1e-3, 1e6, 50)
        assert np.all(np.diff(b_of(NET, g, 10.0)) > 0)
        assert np.all(np.diff(b_of(NET, 10.0, g)) < 0)

    def test_log_form_huge_radius(self):
        # (K r)^beta overflows; the log form does not
        assert math.isfinite(b_of_r(NET, 1e300, 1.0))
        assert b_of_r(NET, 2.0, 7.0) == pytest.approx(b_of(NET, h_of(NET, 2.0), 7.0), rel=1e-13)


class TestMarginal:
    def test_at_threshold(self):
        p = PropagationParams(1.0, 4.0, 2.0)
        assert marginal_prob(p, [1.0, 0.0], 1.0) == pytest.approx(Q(0.5))

    def test_half(self):
        r0 = transition_radius(NET, 1e11)
        assert marginal_prob_r(NET, r0, 1e11) == pytest.approx(0.5, abs=1e-12)

    def test_monte_carlo(self, rng):
        n = 1_000_000
        r, t = 0.5, 1e11
        y = h_of(NET, r) / shadow(rng.standard_normal(n), NET.sigma, NET.beta)
        p = marginal_prob_r(NET, r, t)
        assert abs(np.mean(y <= t) - p) < 3 * math.sqrt(p * (1 - p) / n)

    def test_log_q(self):
        # Q(x) = erfcx(x / sqrt2) exp(-x^2 / 2) / 2 keeps the reference finite
        ref = math.log(0.5 * special.erfcx(40 / math.sqrt(2))) - 800.0
        assert log_Q(40.0) == pytest.approx(ref, rel=1e-12)


class TestMeanMeasure:
    def test_empty(self):
        empty = PointConfig(np.zeros((0, 2)), 1.0, PlacementKind.EXPLICIT, 1.0)
        assert mean_measure_det(NET, empty, 1e10) == 0.0

    def test_single_point(self):
        cfg = explicit_config([[0.3, 0.4]], C=1.0)
        t = h_of(NET, 0.5)
        assert mean_measure_det(NET, cfg, t) == pytest.approx(Q(NET.sigma / NET.beta))

    def test_array_threshold(self):
        cfg = gen_hex_grid(5.0, 3.0)
        ts = np.array([1e9, 1e10])
        out = mean_measure_det(NET, cfg, ts)
        assert out.shape == (2,) and out[0] < out[1]

    def test_hex_monte_carlo(self, rng):
        cfg = gen_hex_grid(5.0, 4.0)
        model = CorrelationModel.exponential(0.2)
        fac = factorize(model, cfg.points)
        t = 1e10
        counts = []
        for _ in range(10_000):
            fs = field_sample(fac.draw(rng), NET.sigma, NET.beta)
            counts.append(realize_spectrum(NET, cfg, fs, [t]).counts[t])
        counts = np.asarray(counts)
        M = mean_measure_det(NET, cfg, t)
        assert abs(counts.mean() - M) < 3 * counts.std(ddof=1) / math.sqrt(counts.size)

    def test_poisson_disc_small_t(self):
        assert mean_measure_poisson_disc(NET, 10.0, 0.0) == 0.0
        assert mean_measure_poisson_disc(NET, 10.0, 1e-30) < 1e-12

    def test_limit_substitution(self):
        p = PropagationParams(1.0, 4.0, 1.0, 1.0)
        assert mean_measure_limit(p, 16.0) == pytest.approx(4 * math.pi)
        assert mean_measure_limit(p, 0.0) == 0.0

    def test_disc_converges_to_limit(self):
        t = 1e11
        # radius where Q(b(r)) < 1e-12, times ten
        r_far = next(r for r in np.geomspace(1, 1e4, 400) if Q(b_of_r(NET, r, t)) < 1e-12)
        assert mean_measure_poisson_disc(NET, 10 * r_far, t) == pytest.approx(
            mean_measure_limit(NET, t), rel=1e-8)

    def test_poisson_monte_carlo(self, rng):
        C, t = 5.0, 1e10
        counts = []
        for _ in range(10_000):
            cfg = gen_poisson(NET.kappa, C, rng)
            s = shadow(rng.standard_normal(len(cfg)), NET.sigma, NET.beta)
            counts.append(np.count_nonzero(h_of(NET, cfg.norms) / s <= t) if len(cfg) else 0)
        counts = np.asarray(counts)
        M = mean_measure_poisson_disc(NET, C, t)
        assert abs(counts.mean() - M) < 3 * counts.std(ddof=1) / math.sqrt(counts.size)

    @pytest.mark.parametrize("sigma", [0.5, 2.3, 10.0, 30.0, 60.0])
    def test_radial_integral_to_inf(self, sigma):
        p = PropagationParams(4000.0, 3.6, sigma, 1.0)
        got = 2 * math.pi * radial_integral_to_inf(p, 1e11, 0.0)
        assert got == pytest.approx(mean_measure_limit(p, 1e11), rel=1e-8)


class TestRealize:
    def test_huge_shadows(self):
        cfg = gen_hex_grid(5.0, 2.0)
        out = realize_spectrum(NET, cfg, np.full(len(cfg), 1e300), [1.0])
        assert out.counts[1.0] == len(cfg)

    def test_counts_monotone(self, rng):
        cfg = gen_hex_grid(5.0, 3.0)
        ts = [1e9, 1e10, 1e11]
        for _ in range(100):
            fs = field_sample(rng.standard_normal(len(cfg)), NET.sigma, NET.beta)
            c = realize_spectrum(NET, cfg, fs, ts).counts
            assert c[1e9] <= c[1e10] <= c[1e11]

    def test_shape_mismatch(self):
        with pytest.raises(ParameterDomainError):
            realize_spectrum(NET, gen_hex_grid(5.0, 2.0), np.ones(3), [1.0])


class TestMills:
    def test_bounds_at_one(self):
        assert mills_bounds(1.0) == (0.5, 1.0)

    def test_true_value_at_one(self):
        ref = math.erfc(1 / math.sqrt(2)) * math.sqrt(math.pi / 2) * math.exp(0.5)
        assert mills_ratio(1.0) == pytest.approx(ref, rel=1e-14)
        assert mills_ratio(1.0) == pytest.approx(0.65568, abs=1e-5)

    def test_sandwich(self):
        for r in np.linspace(0.01, 8.0, 50):
            lo, hi = mills_bounds(r)
            ref = special.erfc(r / math.sqrt(2)) * math.sqrt(math.pi / 2) * math.exp(r * r / 2)
            assert lo <= ref <= hi


class TestGaussIdentities:
    def test_standard(self):
        assert gauss_expect_identities(0.0, 1.0) == pytest.approx((1 / math.sqrt(2), 0.0, 1.0))

    def test_shifted(self):
        e = math.exp(-0.25)
        assert gauss_expect_identities(1.0, 1.0) == pytest.approx(
            (e / math.sqrt(2), e / (2 * math.sqrt(2)), math.sqrt(2)))

    def test_monte_carlo(self, rng):
        n = 1_000_000
        for m, v in [(0.3, 0.7), (-1.2, 2.0)]:
            x = m + v * rng.standard_normal(n)
            a = np.exp(-x * x / 2)
            b = x * a
            ea, eb, bound = gauss_expect_identities(m, v)
            assert abs(a.mean() - ea) < 3 * a.std() / math.sqrt(n)
            assert abs(b.mean() - eb) < 3 * b.std() / math.sqrt(n)
            assert bound >= np.maximum(x, 0).mean()


class TestUnits:
    def test_normalized(self):
        assert normalized_threshold(1e7, 1e4) == pytest.approx(1e11)

    def test_dbm(self):
        assert threshold_from_dbm(-60.0, 40.0) == pytest.approx(4e7)
