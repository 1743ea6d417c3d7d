import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pureshape.classical import (
    IntegrationControls,
    constraint_residual,
    epsilon,
    integrate_curve,
    nbody_rhs,
    state_from_cartesian,
    state_from_shape,
)
from pureshape.errors import ConstraintViolation, KappaUnderflow
from pureshape.fixtures import janus_draw
from pureshape.geometry import Configuration, MassProfile, PotentialSpec, SphereChart, random_shapes
from pureshape.oracle import total_energy, zero_energy_velocities

EQUAL = MassProfile.equal(3)
CHART = SphereChart(EQUAL)


def _unit_tangent(n, v):
    t = CHART.tangent_project(n, v)
    return CHART.unit_speed * t / np.linalg.norm(t)


class TestEpsilon:
    def test_branch_sign(self):
        assert epsilon(4.0, -3.0, +1) == pytest.approx(np.sqrt(0.5))
        assert epsilon(4.0, -3.0, -1) == pytest.approx(-np.sqrt(0.5))

    def test_positive_radicand_is_a_violation(self):
        with pytest.raises(ConstraintViolation):
            epsilon(4.0, -1.0)

    def test_tiny_positive_radicand_is_clipped(self):
        assert epsilon(2.0, -1.0 + 1e-9) == 0.0

    def test_kappa_must_be_positive(self):
        with pytest.raises(KappaUnderflow):
            epsilon(0.0, -1.0)

    @given(st.floats(0.1, 10.0), st.floats(-10.0, -0.06), st.sampled_from([-1, 1]))
    def test_constraint_holds_by_construction(self, kappa, C, sign):
        if 1 + 2 * C / kappa > 0:
            return
        assert abs(constraint_residual(kappa, C, epsilon(kappa, C, sign))) < 1e-12


class TestInitialData:
    def test_zero_energy_draw_satisfies_constraint(self, rng):
        for _ in range(5):
            r, v = janus_draw(rng)
            spec = PotentialSpec()
            assert abs(total_energy(r, v, EQUAL.mu, spec)) < 1e-10
            st_ = state_from_cartesian(r, v, EQUAL, spec)
            c = CHART.potential(st_.q.coords, spec)
            assert abs(constraint_residual(st_.kappa, c, st_.eps)) < 1e-10
            assert abs(st_.eps) < 1e-10  # drawn at a Janus point

    def test_angular_momentum_is_rejected(self, rng):
        r = rng.normal(size=(3, 2))
        v = np.c_[-r[:, 1], r[:, 0]]  # rigid rotation
        with pytest.raises(ValueError, match="angular momentum"):
            state_from_cartesian(r, v, EQUAL)

    def test_state_from_shape_matches_cartesian(self, rng):
        r, v = janus_draw(rng)
        v, r = zero_energy_velocities(Configuration(r, EQUAL), v, PotentialSpec(), dilation=0.4)
        a = state_from_cartesian(r, v, EQUAL)
        b = state_from_shape(a.q, a.dir.u, a.kappa, EQUAL, eps_sign=a.eps_sign)
        assert b.eps == pytest.approx(a.eps, rel=1e-9)


class TestFlows:
    @pytest.mark.parametrize("s", [0.1, 0.7, 2.0])
    def test_geodesic_is_a_great_circle(self, rng, s):
        n0 = random_shapes(rng, 1)[0]
        u0 = _unit_tangent(n0, rng.normal(size=3))
        st_ = state_from_shape(n0, u0, 1.0, EQUAL, PotentialSpec(softening=1.0), tol=10.0)
        curve = integrate_curve(st_, s, EQUAL, model="geodesic")
        # unit kinematic speed on the radius-1/2 sphere: angle 2s on the unit sphere
        expect = np.cos(2 * s) * n0 + np.sin(2 * s) * u0 / CHART.unit_speed
        assert np.allclose(curve.points[-1], expect, atol=1e-9)

    def test_forward_then_backward_returns(self, rng):
        r, v = janus_draw(rng, spec=PotentialSpec(softening=0.2))
        spec = PotentialSpec(softening=0.2)
        st0 = state_from_cartesian(r, v, EQUAL, spec)
        fwd = integrate_curve(st0, 0.8, EQUAL, spec)
        back = integrate_curve(fwd[-1].state, -0.8, EQUAL, spec)
        assert np.allclose(back.points[-1], st0.q.coords, atol=1e-9)
        assert back[-1].state.kappa == pytest.approx(st0.kappa, rel=1e-8)

    def test_janus_point_is_recorded(self, rng):
        r, v = janus_draw(rng)
        st0 = state_from_cartesian(r, v, EQUAL)
        # start slightly before the Janus point by running backwards first
        pre = integrate_curve(st0, -0.3, EQUAL)
        curve = integrate_curve(pre[-1].state, 0.6, EQUAL)
        assert len(curve.events) == 1
        assert curve.events[0] == pytest.approx(0.3, abs=1e-8)
        assert np.max(np.abs(curve.residual)) < 1e-6

    def test_rhs_matches_carried_flow(self, rng):
        r, v = janus_draw(rng)
        v, r = zero_energy_velocities(Configuration(r, EQUAL), v, PotentialSpec(), dilation=0.3)
        st0 = state_from_cartesian(r, v, EQUAL)
        dq, du, dk = nbody_rhs(st0, EQUAL)
        assert np.allclose(dq, st0.dir.u)
        assert abs(np.dot(du, st0.q.coords) + np.dot(dq, dq)) < 1e-9  # stays on the sphere

    def test_preshape_chart_four_bodies(self, rng):
        mp = MassProfile.equal(4)
        spec = PotentialSpec(softening=0.1)
        r = rng.normal(size=(4, 3))
        v, r = zero_energy_velocities(Configuration(r, mp), rng.normal(size=(4, 3)), spec, dilation=0.2)
        st0 = state_from_cartesian(r, v, mp, spec)
        curve = integrate_curve(st0, 0.3, mp, spec, IntegrationControls(rtol=1e-10, atol=1e-12))
        assert np.max(np.abs(curve.residual)) < 1e-6
        assert curve.points.shape[1:] == (4, 3)
