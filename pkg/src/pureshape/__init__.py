"""Relational N-body dynamics on shape space.

Curves are integrated as unparametrized equations of state (shape point, unit
direction, intrinsic acceleration), with Newtonian scale and time recovered
afterwards by quadrature.  See the README for a tour.
"""
from .errors import *  # noqa: F401,F403
from .geometry import (
    Configuration,
    KinematicMetric,
    MassProfile,
    PotentialSpec,
    PreshapeChart,
    ShapePoint,
    SphereChart,
    kinematic_metric_at,
    project_to_shape,
    shape_potential,
    shape_potential_gradient,
)
from .classical import (
    ClassicalCurveState,
    Curve,
    CurveSample,
    Direction,
    IntegrationControls,
    epsilon,
    geodesic_rhs,
    integrate_curve,
    nbody_rhs,
    state_from_cartesian,
    state_from_shape,
)
from .oracle import newtonian_oracle, zero_energy_velocities
from .ephemeris import Ephemeris, EphemerisRecord, ephemeris, ephemeris_duration, ephemeris_scale, reconstruct_newtonian
from .sht import SphereGrid
from .quantum import (
    QuantumCurve,
    QuantumModel,
    QuantumParams,
    QuantumState,
    integrate_quantum_curve,
    seed_from_phase,
)
from .analysis import (
    ArrowReport,
    BornSpec,
    ComplexityTrace,
    SubsystemParams,
    arrow_of_time,
    born_test,
    complexity,
    complexity_argmin,
    detect_subsystems,
    hausdorff,
)
from .fixtures import Fixture, fixture_names, load_fixture
from .config import RunConfig, load_config, parse_config

__version__ = "0.1.0"
