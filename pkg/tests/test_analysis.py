from types import SimpleNamespace

import numpy as np
import pytest

from pureshape.analysis import (
    BornSpec,
    ComplexityTrace,
    SubsystemParams,
    arrow_of_time,
    born_test,
    complexity,
    complexity_argmin,
    detect_subsystems,
    hausdorff,
    tv_distance,
)
from pureshape.errors import Inconclusive, RegimeViolation
from pureshape.geometry import MassProfile

EQUAL = MassProfile.equal(3)


class TestArrow:
    def test_parabola_grows_both_ways(self):
        s = np.linspace(0, 10, 400)
        rep = arrow_of_time(ComplexityTrace(s, (s - 3.0) ** 2))
        assert rep.arrow == "both" and rep.unique_minimum
        assert rep.janus_s == pytest.approx(3.0, abs=0.03)
        assert rep.slope_before > 0 and rep.slope_after > 0

    def test_monotone_trace_is_inconclusive(self):
        s = np.linspace(0, 1, 100)
        with pytest.raises(Inconclusive):
            arrow_of_time(ComplexityTrace(s, s))

    def test_constant_trace_is_inconclusive(self):
        s = np.linspace(0, 1, 100)
        with pytest.raises(Inconclusive):
            arrow_of_time(ComplexityTrace(s, np.ones_like(s)))

    def test_two_separated_minima_are_not_unique(self):
        s = np.linspace(0, 4 * np.pi, 2001)
        assert not arrow_of_time(ComplexityTrace(s, np.cos(s))).unique_minimum

    def test_complexity_is_minus_potential(self):
        curve = SimpleNamespace(s=[0.0, 1.0], potential=[-2.0, -3.0])
        assert np.array_equal(complexity(curve).values, [2.0, 3.0])

    def test_argmin_is_equilateral(self):
        n = complexity_argmin(EQUAL, n=5000, seed=1)
        assert abs(n[2]) > 0.99


class TestHausdorff:
    @staticmethod
    def _circle(s):
        return np.c_[np.cos(s), np.sin(s), 0 * s], np.c_[-np.sin(s), np.cos(s), 0 * s]

    def test_samples_on_the_curve(self):
        s = np.linspace(0, 3, 40)
        p, _ = self._circle(s)
        assert hausdorff(p, p) == 0.0

    def test_hermite_beats_polyline(self):
        coarse = np.linspace(0, 3, 30)
        fine = np.linspace(0, 3, 997)
        pb, tb = self._circle(coarse)
        pa, _ = self._circle(fine)
        poly = hausdorff(pa, pb)
        herm = hausdorff(pa, pb, tb, coarse)
        sagitta = 1 - np.cos(0.5 * (coarse[1] - coarse[0]))
        assert poly == pytest.approx(sagitta, rel=1e-2)
        assert herm < 1e-3 * poly

    def test_offset_curve(self):
        s = np.linspace(0, 3, 200)
        p, t = self._circle(s)
        assert hausdorff(1.01 * p, p, t, s) == pytest.approx(0.01, rel=1e-6)


class TestTotalVariation:
    def test_all_mass_in_one_bin(self):
        assert tv_distance(np.full(100, 0.01), np.full(8, 1 / 8)) == pytest.approx(7 / 8)

    def test_matching_histogram(self):
        x = (np.arange(800) + 0.5) * 2 * np.pi / 800
        assert tv_distance(x, np.full(8, 1 / 8)) == pytest.approx(0.0, abs=1e-12)


def _binary_and_third(n=200, radius=0.01):
    t = np.linspace(0, 2, n)
    w = 2 * np.pi * 5
    a = radius * np.c_[np.cos(w * t), np.sin(w * t)]
    pos = np.zeros((n, 3, 2))
    pos[:, 0], pos[:, 1] = a, -a
    pos[:, 2] = [1.0, 0.0]
    return SimpleNamespace(positions=pos, masses=EQUAL)


class TestSubsystems:
    def test_tight_binary_is_flagged(self):
        rep = detect_subsystems(_binary_and_third())
        assert rep.flagged == [(0, 1)]
        c = rep.clusters[0]
        assert c.intra_ratio >= 10 and c.scale_drift < 1e-10 and np.isinf(c.quantum_ratio)

    def test_large_quantum_term_breaks_condition_two(self):
        traj = _binary_and_third()
        rep = detect_subsystems(traj, quantum_potential=np.full(len(traj.positions), 1e3))
        assert rep.flagged == []
        assert rep.clusters[0].conditions == (True, False, True)

    def test_homothetic_triangle_has_no_clusters(self):
        ang = 2 * np.pi * np.arange(3) / 3
        tri = np.c_[np.cos(ang), np.sin(ang)]
        traj = SimpleNamespace(positions=np.linspace(1, 5, 50)[:, None, None] * tri, masses=EQUAL)
        rep = detect_subsystems(traj)
        assert rep.flagged == [] and rep.clusters == []

    def test_breathing_binary_fails_scale_drift(self):
        traj = _binary_and_third()
        traj.positions[:, :2] *= np.linspace(1, 1.5, len(traj.positions))[:, None, None]
        rep = detect_subsystems(traj, params=SubsystemParams())
        assert rep.clusters[0].conditions[2] is False


class TestBorn:
    def test_branch_term_is_a_regime_violation(self):
        with pytest.raises(RegimeViolation):
            born_test(BornSpec(branch_term=True), members=10)

    def test_bins_must_divide_grid(self):
        with pytest.raises(ValueError):
            born_test(BornSpec(bins=60), members=10)

    def test_small_ensemble_tracks_density(self):
        rep = born_test(BornSpec(duration=0.2, bins=16), members=4000, seed=3)
        assert rep.tv_final < 0.06
        assert rep.tv_control > 0.2
        assert rep.to_json()["ensemble_size"] == 4000
