import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pureshape.errors import CollisionSingularity, DegenerateInput, TotalCollision
from pureshape.geometry import (
    Configuration,
    MassProfile,
    PotentialSpec,
    PreshapeChart,
    SphereChart,
    procrustes_distance,
    project_to_shape,
    random_shapes,
    shape_potential,
)

coords = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
planar3 = arrays(np.float64, (3, 2), elements=coords)
mass_triples = st.tuples(*[st.floats(0.2, 5.0)] * 3)


def _rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _well_spread(r):
    r = r - r.mean(axis=0)
    d = np.linalg.norm(r[:, None] - r[None], axis=-1)
    return np.sqrt(np.sum(r * r)) > 1e-2 and d[np.triu_indices(3, 1)].min() > 1e-3


class TestMassProfile:
    def test_from_masses_normalizes_to_mean_one(self):
        m = MassProfile.from_masses([1.0, 2.0, 3.0])
        assert np.isclose(m.mu.sum(), 3.0)
        assert np.allclose(m.mu, [0.5, 1.0, 1.5])

    @pytest.mark.parametrize("bad", [[1.0, -1.0, 3.0], [0.0, 1.0, 2.0]])
    def test_rejects_nonpositive(self, bad):
        with pytest.raises(ValueError):
            MassProfile.from_masses(bad)

    def test_rejects_wrong_sum(self):
        with pytest.raises(ValueError):
            MassProfile((1.0, 1.0, 2.0))

    def test_single_body_is_degenerate(self):
        with pytest.raises(DegenerateInput):
            MassProfile((1.0,))


class TestSphereChart:
    chart = SphereChart(MassProfile.equal(3))

    def test_equilateral_maps_to_poles(self):
        ang = 2 * np.pi * np.arange(3) / 3
        tri = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        n = self.chart.project(Configuration(tri, MassProfile.equal(3))).coords
        assert np.isclose(abs(n[2]), 1.0)
        mirrored = tri * np.array([1.0, -1.0])
        m = self.chart.project(Configuration(mirrored, MassProfile.equal(3))).coords
        assert np.isclose(m[2], -n[2])

    def test_collinear_shapes_lie_on_equator(self, rng):
        x = rng.normal(size=3)
        n = self.chart.project(Configuration(np.c_[x, np.zeros(3)], MassProfile.equal(3))).coords
        assert abs(n[2]) < 1e-14

    def test_pair_collision_point(self):
        r = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.5]])
        n = self.chart.project(Configuration(r, MassProfile.equal(3))).coords
        assert np.allclose(n, [-1.0, 0.0, 0.0])
        assert np.allclose(self.chart.collision_points()[0], n)

    def test_total_collision(self):
        with pytest.raises(TotalCollision):
            project_to_shape(Configuration(np.ones((3, 2)), MassProfile.equal(3)))

    @given(planar3, st.floats(0, 2 * np.pi), st.floats(0.1, 10.0), arrays(np.float64, 2, elements=coords))
    def test_similarity_invariance(self, r, angle, scale, shift):
        if not _well_spread(r):
            return
        cfg = Configuration(r, MassProfile.equal(3))
        moved = cfg.transformed(_rotation(angle), scale, shift)
        assert np.allclose(self.chart.project(cfg).coords, self.chart.project(moved).coords, atol=1e-10)

    @given(mass_triples, st.floats(-1, 1), st.floats(0, 2 * np.pi))
    def test_section_is_right_inverse(self, masses, n1, phi):
        chart = SphereChart(MassProfile.from_masses(masses))
        s = np.sqrt(1 - n1 * n1)
        n = np.array([n1, s * np.cos(phi), s * np.sin(phi)])
        r = chart.representative(n, scale=2.0)
        cfg = Configuration(r, chart.masses)
        assert np.isclose(cfg.scale(), 2.0)
        assert np.allclose(chart.project(cfg).coords, n, atol=1e-12)

    @given(mass_triples, planar3)
    def test_pair_separations_match_cartesian(self, masses, r):
        if not _well_spread(r):
            return
        mp = MassProfile.from_masses(masses)
        chart = SphereChart(mp)
        cfg = Configuration(r, mp)
        n = chart.project(cfg).coords
        L2 = cfg.scale() ** 2
        cart = [np.sum((r[i] - r[j]) ** 2) / L2 for i, j in ((0, 1), (0, 2), (1, 2))]
        assert np.allclose(chart.pair_separations2(n), cart, rtol=1e-10)

    @given(mass_triples, planar3, st.sampled_from([0.0, 0.05, 1.0]))
    def test_shape_potential_is_scale_free_newtonian(self, masses, r, soft):
        if not _well_spread(r):
            return
        mp = MassProfile.from_masses(masses)
        spec = PotentialSpec(softening=soft)
        cfg = Configuration(r, mp)
        q = project_to_shape(cfg)
        # V = beta L^k C with k = -1
        assert np.isclose(shape_potential(q, mp, spec), cfg.potential(spec) * cfg.scale(), rtol=1e-10)

    def test_gradient_matches_finite_differences(self, rng):
        spec = PotentialSpec(softening=0.1)
        for n in random_shapes(rng, 5):
            g = self.chart.gradient(n, spec)
            assert abs(g @ n) < 1e-12
            for t in np.linalg.svd(n[None])[2][1:]:
                h = 1e-6
                plus = self.chart.potential(self.chart.normalize(n + h * t), spec)
                minus = self.chart.potential(self.chart.normalize(n - h * t), spec)
                assert np.isclose((plus - minus) / (2 * h), g @ t, rtol=1e-6, atol=1e-7)

    def test_kinematic_metric_and_unit_speed(self, rng):
        n = random_shapes(rng, 1)[0]
        t = self.chart.tangent_project(n, rng.normal(size=3))
        u = self.chart.unit_speed * t / np.linalg.norm(t)
        assert np.isclose(self.chart.inner(n, u, u), 1.0)
        metric = self.chart.metric(n)
        assert np.allclose(metric.g @ metric.ginv, np.eye(2))

    def test_unsoftened_collision_raises(self):
        with pytest.raises(CollisionSingularity):
            self.chart.potential(self.chart.collision_points()[1], PotentialSpec())

    def test_mass_weighted_and_unweighted_scale(self):
        cfg = Configuration(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), MassProfile.from_masses([1, 1, 4]))
        assert cfg.scale() != cfg.scale(weighted=False)
        eq = Configuration(cfg.positions, MassProfile.equal(3))
        assert np.isclose(eq.scale(), eq.scale(weighted=False))


class TestPreshapeChart:
    @given(arrays(np.float64, (4, 3), elements=coords), st.floats(0.2, 5.0))
    def test_projection_is_similarity_invariant(self, r, scale):
        r = r - r.mean(axis=0)
        if np.linalg.norm(r) < 1e-1 or np.linalg.matrix_rank(r, tol=1e-3) < 3:
            return
        mp = MassProfile.from_masses([1, 2, 3, 4])
        chart = PreshapeChart(mp, 3)
        rot, _ = np.linalg.qr(np.arange(1, 10).reshape(3, 3) + np.eye(3))
        if np.linalg.det(rot) < 0:
            rot[:, 0] *= -1
        x = chart.project(Configuration(r, mp)).coords
        y = chart.project(Configuration(scale * r @ rot.T + 1.0, mp)).coords
        assert procrustes_distance(x, y, mp.mu) < 1e-6

    def test_dimension_count(self):
        assert PreshapeChart(MassProfile.equal(4), 3).dim == 5
        assert PreshapeChart(MassProfile.equal(5), 2).dim == 6

    def test_horizontal_projection_removes_gauge_directions(self, rng):
        mp = MassProfile.equal(4)
        chart = PreshapeChart(mp, 3)
        x = chart.project(Configuration(rng.normal(size=(4, 3)), mp)).coords
        v = chart.horizontal_project(x, rng.normal(size=(4, 3)))
        for w in chart.vertical_basis(x):
            assert abs(chart.inner(x, v, w)) < 1e-10
