import numpy as np
import pytest

from pureshape.classical import ClassicalModel, state_from_shape
from pureshape.errors import DegenerateInput, ResolutionExceeded
from pureshape.geometry import MassProfile, PotentialSpec, SphereChart, random_shapes
from pureshape.quantum import (
    QuantumCurveState,
    QuantumModel,
    QuantumParams,
    QuantumState,
    dbb_rhs,
    guidance_residual,
    integrate_quantum_curve,
    quantum_potential,
    seed_from_phase,
    tilde_K,
)
from pureshape.sht import SphereGrid
from pureshape.classical import Direction
from pureshape.geometry import ShapePoint

EQUAL = MassProfile.equal(3)
SOFT = PotentialSpec(softening=1.0)
CHART = SphereChart(EQUAL)


@pytest.fixture(scope="module")
def grid():
    return SphereGrid(16, 32)


def test_dipole_is_normalized_and_nodeless(grid):
    psi = QuantumState.rotating_dipole(grid, 0.6, hbar=0.5)
    assert psi.norm == pytest.approx(1.0)
    # |1 + c (n1 + i n2)| lies in [1 - c, 1 + c]
    assert psi.R.min() >= (0.4 / 1.6) * psi.R.max() - 1e-12
    with pytest.raises(ValueError):
        QuantumState.rotating_dipole(grid, 1.0)


def test_quantum_potential_of_constant_amplitude_vanishes(grid):
    psi = QuantumState.from_functions(grid, lambda n: np.ones(n.shape[:-1]), lambda n: n[..., 1])
    assert np.max(np.abs(quantum_potential(psi))) < 1e-10


def test_quantum_potential_of_a_harmonic_ratio(grid):
    # R = 2 + Y_1 along n1: Lap R = -2/r^2 (R - 2) on the radius-1/2 sphere
    psi = QuantumState.from_functions(grid, lambda n: 2.0 + n[..., 0], lambda n: 0 * n[..., 0], normalize=False)
    n1 = grid.nodes[..., 0]
    expect = (2.0 / grid.radius**2) * n1 / (2.0 * (2.0 + n1))
    assert np.allclose(quantum_potential(psi), expect, atol=1e-10)


def test_seed_has_zero_guidance_residual(grid):
    psi = QuantumState.rotating_dipole(grid, 0.5)
    st = seed_from_phase([0.6, 0.3, 0.3], psi)
    assert np.isclose(CHART.inner(st.Q.coords, st.dir.u, st.dir.u), 1.0)
    params = QuantumParams(branch_term=False)
    assert guidance_residual(st, spec=SOFT, params=params) < 1e-12


def test_branch_term_reduces_to_classical_eps(grid, rng):
    psi = QuantumState.from_functions(grid, lambda n: np.ones(n.shape[:-1]), lambda n: 0 * n[..., 0])
    params = QuantumParams(k_coupling=0.0)
    for n in random_shapes(rng, 5):
        c = CHART.potential(n, SOFT)
        kappa = -2.0 * c / 1.3  # eps^2 = 0.3
        u = CHART.unit_speed * np.cross(n, [0.0, 0.0, 1.0]) / np.linalg.norm(np.cross(n, [0.0, 0.0, 1.0]))
        for sign in (-1, 1):
            st = QuantumCurveState(ShapePoint(n), Direction(u), kappa, psi, sign)
            assert tilde_K(st, spec=SOFT, params=params) == pytest.approx(-kappa * sign * np.sqrt(0.3))
            assert tilde_K(st, spec=SOFT, params=QuantumParams(k_coupling=0.0, branch_term=False)) == 0.0


def test_zero_coupling_curve_rhs_is_classical(grid, rng):
    psi = QuantumState.rotating_dipole(grid, 0.5)
    model = ClassicalModel(CHART, SOFT)
    params = QuantumParams(k_coupling=0.0)
    for n in random_shapes(rng, 10):
        u = CHART.unit_speed * np.cross(n, rng.normal(size=3))
        u = CHART.unit_speed * u / np.linalg.norm(u)
        kappa = -2.0 * CHART.potential(n, SOFT) * rng.uniform(0.3, 0.95)
        cs = state_from_shape(n, u, kappa, EQUAL, SOFT, eps_sign=1)
        dq, du, dk, _, _ = model.flow(n, u, kappa, cs.eps)
        qs = QuantumCurveState(ShapePoint(n), Direction(u), kappa, psi, 1)
        qdq, qdu, qdk, _, _ = dbb_rhs(qs, spec=SOFT, params=params)
        assert np.allclose(qdq, dq, rtol=0, atol=1e-12)
        assert np.allclose(qdu, du, rtol=1e-10, atol=1e-10)
        assert qdk == pytest.approx(dk, rel=1e-10, abs=1e-10)


def test_softening_is_required(grid):
    with pytest.raises(DegenerateInput):
        QuantumModel(grid, EQUAL, PotentialSpec())


def test_alpha_must_match_degree():
    with pytest.raises(ValueError):
        QuantumParams(alpha=2.0).check_spec(PotentialSpec())


def test_coarse_grid_reports_resolution():
    g = SphereGrid(8, 16)
    psi = QuantumState.rotating_dipole(g, 0.5)
    st = seed_from_phase([0.6, 0.3, 0.3], psi)
    with pytest.raises(ResolutionExceeded):
        integrate_quantum_curve(st, 100.0, EQUAL, SOFT, QuantumParams(branch_term=False))


def test_short_decoupled_run_conserves_norm(grid):
    psi = QuantumState.rotating_dipole(grid, 0.5)
    st = seed_from_phase([0.6, 0.3, 0.3], psi)
    curve = integrate_quantum_curve(st, 0.2, EQUAL, SOFT, QuantumParams(branch_term=False))
    assert np.max(np.abs(curve.norm - curve.norm[0])) < 1e-10
    assert np.max(curve.guidance) < 1e-3
    assert np.allclose(np.linalg.norm(curve.points, axis=1), 1.0)
    assert curve.final.psi.R.shape == grid.shape
