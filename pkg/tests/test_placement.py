import math

import numpy as np
import pytest
from scipy import stats
from scipy.spatial.distance import pdist

from shadowspec.errors import DegenerateConfigurationError, ParameterDomainError
from shadowspec.placement import (
    PlacementKind,
    PointConfig,
    annulus_counts,
    explicit_config,
    gen_hardcore_matern2,
    gen_hex_grid,
    gen_poisson,
    geometry_stats,
    hex_lattice_constant,
    load_points,
    matern2_intensity,
)


class TestHex:
    def test_count_matches_density(self):
        cfg = gen_hex_grid(5.0, 30.0)
        expected = 5.0 * math.pi * 900
        # boundary effects are O(perimeter / spacing)
        assert abs(len(cfg) - expected) < 2 * math.pi * 30 / hex_lattice_constant(5.0)

    def test_min_spacing_brute_force(self):
        cfg = gen_hex_grid(5.0, 3.0)
        assert pdist(cfg.points).min() == pytest.approx(math.sqrt(2 / (math.sqrt(3) * 5.0)), rel=1e-12)

    def test_origin_at_centroid(self):
        cfg = gen_hex_grid(5.0, 3.0)
        a = hex_lattice_constant(5.0)
        nearest = np.sort(cfg.norms)[:3]
        assert nearest == pytest.approx([a / math.sqrt(3)] * 3, rel=1e-12)

    def test_tiny_disc(self):
        a = hex_lattice_constant(0.01)
        cfg = gen_hex_grid(0.01, a / 4)
        assert len(cfg) <= 1

    def test_sorted_and_inside(self):
        cfg = gen_hex_grid(2.0, 5.0)
        assert np.all(np.diff(cfg.norms) >= 0)
        assert cfg.norms.max() <= 5.0


class TestPoisson:
    def test_small_disc_empty(self, rng):
        assert len(gen_poisson(5.0, 1e-6, rng)) == 0

    def test_count_moments(self, rng):
        n = np.array([len(gen_poisson(5.0, 2.0, rng)) for _ in range(10_000)])
        lam = 5.0 * math.pi * 4.0
        assert abs(n.mean() - lam) < 3 * math.sqrt(lam / n.size)
        se_var = math.sqrt((lam + 2 * lam**2) / n.size)
        assert abs(n.var(ddof=1) - lam) < 3 * se_var

    def test_uniform_radius(self):
        rng = np.random.default_rng(2024)
        pts = np.concatenate([gen_poisson(5.0, 3.0, rng).norms for _ in range(50)])
        # |x|^2 / C^2 is uniform on [0, 1]
        assert stats.kstest((pts / 3.0) ** 2, "uniform").pvalue > 0.01

    def test_invalid(self, rng):
        with pytest.raises(ParameterDomainError):
            gen_poisson(-1.0, 1.0, rng)


class TestHardcore:
    def test_retention_small_eps(self):
        assert matern2_intensity(5.0, 1e-6) == pytest.approx(5.0, rel=1e-9)

    def test_realized_intensity(self, rng):
        kp, eps, C = 10.0, 0.2, 3.0
        area = math.pi * C * C
        n = np.array([len(gen_hardcore_matern2(kp, eps, C, rng)) for _ in range(1000)])
        lam = matern2_intensity(kp, eps)
        assert abs(n.mean() / area - lam) < 3 * n.std(ddof=1) / math.sqrt(n.size) / area

    def test_separation(self, rng):
        for _ in range(50):
            cfg = gen_hardcore_matern2(20.0, 0.15, 2.0, rng)
            if len(cfg) > 1:
                assert pdist(cfg.points).min() >= 0.15

    def test_kind_and_metadata(self, rng):
        cfg = gen_hardcore_matern2(5.0, 0.3, 2.0, rng)
        assert cfg.kind is PlacementKind.HARDCORE and cfg.eps_star == 0.3


class TestConfig:
    def test_origin_rejected(self):
        with pytest.raises(DegenerateConfigurationError):
            PointConfig(np.zeros((1, 2)), 1.0, PlacementKind.EXPLICIT, 1.0)

    def test_explicit_outside_disc(self):
        with pytest.raises(ParameterDomainError):
            explicit_config([[2.0, 0.0]], C=1.0)

    def test_restrict(self):
        cfg = explicit_config([[0.5, 0.0], [1.5, 0.0], [0.0, 3.0]], C=4.0)
        assert len(cfg.restrict(2.0)) == 2

    def test_load_points(self, tmp_path):
        p = tmp_path / "a.pts"
        p.write_text("# x y\n1 0\n0 2 # comment\n")
        cfg = load_points(p)
        assert cfg.points.tolist() == [[1.0, 0.0], [0.0, 2.0]]
        assert cfg.disc_radius == 2.0


class TestGeometryStats:
    def test_single_point(self):
        st = geometry_stats(explicit_config([[1.0, 0.0]], C=2.0), 0.7)
        assert (st.d_star, st.T_lower, st.T_upper) == (1.0, 1, 1)
        assert st.eps_min == math.inf

    def test_far_pair(self):
        R = 0.5
        st = geometry_stats(explicit_config([[1.0, 0.0], [1.0 + 3 * R, 0.0]]), R)
        assert (st.T_lower, st.T_upper) == (1, 1)
        assert st.eps_min == pytest.approx(3 * R)

    def test_bracket_grid_search(self, rng):
        R = 0.4
        for _ in range(20):
            pts = rng.uniform(-2, 2, (200, 2))
            cfg = explicit_config(pts, C=3.0)
            st = geometry_stats(cfg, R)
            g = np.linspace(-2.5, 2.5, 101)
            cand = np.vstack([np.stack(np.meshgrid(g, g), -1).reshape(-1, 2), pts])
            d = np.hypot(cand[:, None, 0] - pts[None, :, 0], cand[:, None, 1] - pts[None, :, 1])
            T_grid = int((d <= R).sum(axis=1).max())
            assert st.T_lower <= T_grid <= st.T_upper


class TestAnnulus:
    def test_empty(self):
        cfg = explicit_config([[0.1, 0.0]], C=10.0)
        counts = annulus_counts(cfg, [0.1, 0.0], 1.0)
        assert counts.sum() == 0

    def test_partition(self, rng):
        cfg = gen_poisson(5.0, 4.0, rng)
        c = np.array([0.3, -0.2])
        R = 0.5
        inner = np.count_nonzero(np.hypot(*(cfg.points - c).T) <= R)
        assert annulus_counts(cfg, c, R).sum() + inner == len(cfg)

    def test_annulus_bound(self, rng):
        for it in range(100):
            cfg = gen_poisson(rng.uniform(1, 20), 3.0, rng)
            if len(cfg) == 0:
                continue
            R = rng.uniform(0.1, 1.0)
            T_up = geometry_stats(cfg, R).T_upper
            center = cfg.points[rng.integers(len(cfg))] if it % 2 else rng.uniform(-1, 1, 2)
            counts = annulus_counts(cfg, center, R)
            k = np.arange(1, len(counts) + 1)
            assert np.all(counts <= np.ceil(4 * math.pi * k) * T_up)
