"""Unparametrized equations of state for the geodesic and the E=0 Newtonian systems.

Arc length ``s`` is only a computational label.  The integrated state is
``(q, u, kappa, eps)``: the shape point, the unit tangent (embedded, see
:mod:`pureshape.geometry`), the intrinsic acceleration ``kappa`` and the
dilatational ratio ``eps = D/p``.  ``eps`` is carried along by its own flow
equation so that its zero crossing (the Janus point) is a transversal event;
the energy constraint ``1 + eps^2 + 2 C / kappa = 0`` is then an independent
quality monitor rather than an identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import math

import numpy as np

from .errors import CollisionSingularity, ConstraintViolation, KappaUnderflow
from .geometry import (
    Configuration,
    MassProfile,
    PotentialSpec,
    ShapePoint,
    SphereChart,
    chart_for,
)
from .integrate import StepControls, dopri5

__all__ = [
    "Direction",
    "ClassicalCurveState",
    "CurveSample",
    "Curve",
    "IntegrationControls",
    "ClassicalModel",
    "geodesic_rhs",
    "epsilon",
    "constraint_residual",
    "nbody_rhs",
    "integrate_curve",
    "state_from_cartesian",
    "state_from_shape",
]


@dataclass(frozen=True)
class Direction:
    """Unit tangent ``u`` at a shape point, stored in the chart's embedding."""

    u: np.ndarray

    def angle(self, chart, q) -> float:
        """Chart angle phi of the direction (sphere chart only)."""
        return chart.direction_angle(q, self.u)


@dataclass(frozen=True)
class ClassicalCurveState:
    q: ShapePoint
    dir: Direction
    kappa: float
    eps_sign: int = 1
    # carried value of eps; None means "solve it from the constraint"
    eps: Optional[float] = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.eps_sign not in (-1, 1):
            raise ValueError("eps_sign must be +1 or -1")


@dataclass(frozen=True)
class CurveSample:
    s: float
    state: ClassicalCurveState
    eps: float
    C: float
    residual: float


@dataclass
class IntegrationControls(StepControls):
    """Step controls for the classical curves.

    The constraint residual drifts roughly like ``6e4 * rtol`` across a close
    encounter, so the defaults are tighter than the generic stepper's.
    """

    rtol: float = 1e-12
    atol: float = 1e-14
    tol_constraint: float = 1e-6


class Curve(list):
    """A list of :class:`CurveSample` that remembers how it was produced."""

    def __init__(self, samples=(), *, model=None, events=(), kind="nbody"):
        super().__init__(samples)
        self.model = model
        self.events = list(events)
        self.kind = kind

    @property
    def s(self) -> np.ndarray:
        return np.array([smp.s for smp in self])

    @property
    def points(self) -> np.ndarray:
        return np.array([smp.state.q.coords for smp in self])

    @property
    def tangents(self) -> np.ndarray:
        return np.array([smp.state.dir.u for smp in self])

    @property
    def kappa(self) -> np.ndarray:
        return np.array([smp.state.kappa for smp in self])

    @property
    def eps(self) -> np.ndarray:
        return np.array([smp.eps for smp in self])

    @property
    def potential(self) -> np.ndarray:
        return np.array([smp.C for smp in self])

    @property
    def residual(self) -> np.ndarray:
        return np.array([smp.residual for smp in self])


def epsilon(kappa: float, C: float, sign: int = 1, tol: float = 1e-6) -> float:
    """``eps = sign * sqrt(-(1 + 2 C / kappa))``.

    Radicands within ``tol`` of zero are clipped; anything more positive than
    ``tol`` means the energy constraint cannot hold.
    """
    if not kappa > 0:
        raise KappaUnderflow(f"kappa={kappa!r} must be positive")
    excess = 1.0 + 2.0 * C / kappa
    if excess > tol:
        raise ConstraintViolation(f"1 + 2C/kappa = {excess:.3e} > 0")
    return sign * float(np.sqrt(max(-excess, 0.0)))


def constraint_residual(kappa, C, eps) -> float:
    return 1.0 + eps * eps + 2.0 * C / kappa


class ClassicalModel:
    """Equation-of-state flow on a chart for a given potential."""

    def __init__(self, chart, spec: PotentialSpec = PotentialSpec()):
        self.chart = chart
        self.spec = spec
        self.gamma = spec.degree + 2
        self.n = chart.embed_dim if chart.kind == "sphere" else chart.n_bodies * chart.d
        self._shape = (chart.embed_dim,) if chart.kind == "sphere" else (chart.n_bodies, chart.d)
        self._pairs = None
        if chart.kind == "sphere":
            # scalar copies of the affine pair-separation law for the fast path
            self._pairs = [
                (float(c), tuple(float(x) for x in lin), float(mm))
                for c, lin, mm in zip(chart._pair_const, chart._pair_lin, chart._pair_mass)
            ]

    @property
    def masses(self) -> MassProfile:
        return self.chart.masses

    # -- pieces of the flow ------------------------------------------------------
    def geodesic_accel(self, q, u):
        """Embedding acceleration of a geodesic through ``q`` with velocity ``u``."""
        ch = self.chart
        return -ch.inner(q, u, u) / ch.inner(q, q, q) * q

    def metric_gradient(self, q):
        """Potential value and the metric gradient vector ``g^ab C_,b``."""
        c, grad = self.chart.hessian_free_potential_and_gradient(q, self.spec)
        return c, self.chart.unit_speed**2 * grad

    def flow(self, q, u, kappa, eps):
        """Return ``(dq, du, dkappa, deps)`` and the potential value at ``q``."""
        if not kappa > 1e-12:
            raise KappaUnderflow(f"kappa={kappa!r} underflow")
        c, G = self.metric_gradient(q)
        dCu = self.chart.inner(q, G, u)
        du = self.geodesic_accel(q, u) - (G - dCu * u) / kappa
        dkappa = -self.gamma * kappa * eps - 2.0 * dCu
        deps = -self.gamma * c / kappa + eps * dCu / kappa
        return u, du, dkappa, deps, c

    # -- flat state vectors ----------------------------------------------------
    def pack(self, q, u, kappa, eps):
        return np.concatenate([np.ravel(q), np.ravel(u), [kappa, eps]])

    def unpack(self, y):
        n = self.n
        return y[:n].reshape(self._shape), y[n : 2 * n].reshape(self._shape), y[2 * n], y[2 * n + 1]

    def project(self, y):
        if self._pairs is not None:
            q, u = y[:3], y[3:6]
            q = q / math.sqrt(q @ q)
            u = u - (u @ q) * q
            u = u * (self.chart.unit_speed / math.sqrt(u @ u))
            return np.concatenate([q, u, y[6:]])
        q, u, kappa, eps = self.unpack(y)
        q = self.chart.normalize(q)
        u = self.chart.tangent_project(q, u)
        u = u / np.sqrt(self.chart.inner(q, u, u))
        return self.pack(q, u, kappa, eps)

    def rhs(self, s, y):
        if self._pairs is not None:
            return self._sphere_rhs(y)
        q, u, kappa, eps = self.unpack(y)
        dq, du, dk, de, _ = self.flow(q, u, kappa, eps)
        return self.pack(dq, du, dk, de)

    def _sphere_rhs(self, y):
        # same algebra as flow() on scalars; numpy overhead dominates for 3-vectors
        q0, q1, q2, u0, u1, u2, kappa, eps = y.tolist()
        if not kappa > 1e-12:
            raise KappaUnderflow(f"kappa={kappa!r} underflow")
        soft2 = self.spec.softening**2
        c = g0 = g1 = g2 = 0.0
        for const, (l0, l1, l2), mm in self._pairs:
            d2 = const + l0 * q0 + l1 * q1 + l2 * q2 + soft2
            if d2 <= 1e-24 and soft2 == 0:
                raise CollisionSingularity("two-body collision with unsoftened potential")
            inv = 1.0 / math.sqrt(d2)
            c -= mm * inv
            w = 0.5 * mm * inv * inv * inv
            g0 += w * l0
            g1 += w * l1
            g2 += w * l2
        qq = q0 * q0 + q1 * q1 + q2 * q2
        gq = (g0 * q0 + g1 * q1 + g2 * q2) / qq
        k2 = self.chart.unit_speed**2
        G0, G1, G2 = k2 * (g0 - gq * q0), k2 * (g1 - gq * q1), k2 * (g2 - gq * q2)
        dCu = 0.25 * (G0 * u0 + G1 * u1 + G2 * u2)
        geo = -(u0 * u0 + u1 * u1 + u2 * u2) / qq
        return np.array([
            u0, u1, u2,
            geo * q0 - (G0 - dCu * u0) / kappa,
            geo * q1 - (G1 - dCu * u1) / kappa,
            geo * q2 - (G2 - dCu * u2) / kappa,
            -self.gamma * kappa * eps - 2.0 * dCu,
            -self.gamma * c / kappa + eps * dCu / kappa,
        ])

    def geodesic_vector_rhs(self, s, y):
        n = self.n
        q, u = y[:n].reshape(self._shape), y[n:].reshape(self._shape)
        return np.concatenate([np.ravel(u), np.ravel(self.geodesic_accel(q, u))])

    def geodesic_project(self, y):
        n = self.n
        q, u = y[:n].reshape(self._shape), y[n:].reshape(self._shape)
        q = self.chart.normalize(q)
        u = self.chart.tangent_project(q, u)
        u = u / np.sqrt(self.chart.inner(q, u, u))
        return np.concatenate([np.ravel(q), np.ravel(u)])

    def shape_point(self, q) -> ShapePoint:
        if self.chart.kind == "sphere":
            return ShapePoint(np.array(q), "sphere")
        return ShapePoint(np.array(q), "preshape", weights=self.masses.ratios)


def _model_for(masses, spec, q: ShapePoint):
    if q.chart == "sphere":
        return ClassicalModel(SphereChart(masses), spec)
    n, d = np.shape(q.coords)
    return ClassicalModel(chart_for(masses, d, "preshape"), spec)


def geodesic_rhs(q: ShapePoint, dir: Direction, masses: MassProfile):
    """``(dq, du)`` per unit arc length for the geodesic system.

    ``du`` is the embedding acceleration of a geodesic; its tangential part
    (the covariant derivative of ``u``) vanishes.
    """
    model = _model_for(masses, PotentialSpec(), q)
    return dir.u.copy(), model.geodesic_accel(q.coords, dir.u)


def nbody_rhs(state: ClassicalCurveState, masses: MassProfile, spec: PotentialSpec = PotentialSpec(),
              tol_constraint: float = 1e-6):
    """``(dq, du, dkappa)`` for the E=0 homogeneous N-body equation of state.

    ``eps`` is solved from the energy constraint with the state's branch sign.
    """
    model = _model_for(masses, spec, state.q)
    q = state.q.coords
    c, _ = model.metric_gradient(q)
    eps = epsilon(state.kappa, c, state.eps_sign, tol_constraint)
    dq, du, dk, _, _ = model.flow(q, state.dir.u, state.kappa, eps)
    return dq, du, dk


def state_from_shape(q, u, kappa, masses, spec=PotentialSpec(), eps_sign=1, tol=1e-6):
    """Build a state from chart data; eps follows from the constraint up to ``eps_sign``."""
    q = q if isinstance(q, ShapePoint) else ShapePoint(np.asarray(q, dtype=float), "sphere")
    model = _model_for(masses, spec, q)
    c, _ = model.metric_gradient(q.coords)
    eps = epsilon(kappa, c, eps_sign, tol)
    return ClassicalCurveState(q, Direction(np.asarray(u, dtype=float)), float(kappa), eps_sign, eps)


def state_from_cartesian(positions, velocities, masses: MassProfile, spec: PotentialSpec = PotentialSpec(),
                         chart: str = "auto", j_tol: float = 1e-9) -> ClassicalCurveState:
    """Exact ``(q, u, kappa, eps)`` from Newtonian initial data with zero angular momentum.

    ``p = L^2 |dx/dt|`` with ``x = r / L`` the unit-scale representative,
    ``kappa = p^2 / (beta L^(k+2))`` and ``eps = D / p``.
    """
    mu = masses.mu
    r = np.asarray(positions, dtype=float)
    v = np.asarray(velocities, dtype=float)
    r = r - mu @ r / mu.sum()
    v = v - mu @ v / mu.sum()
    L = float(np.sqrt(np.sum(mu[:, None] * r * r)))
    D = float(np.sum(mu[:, None] * r * v))
    J = _angular_momentum(r, v, mu)
    P = float(np.sqrt(np.sum(mu[:, None] * v * v)))
    if np.linalg.norm(J) > j_tol * max(L * P, 1e-300):
        raise ValueError("the shape-space equation of state needs zero angular momentum")
    x = r / L
    xdot = v / L - r * D / L**3
    sigma = float(np.sqrt(np.sum(mu[:, None] * xdot * xdot)))
    if not sigma > 0:
        raise ValueError("pure dilation: the shape does not move")
    p = L * L * sigma
    kappa = p * p / (spec.beta * L ** (spec.degree + 2))
    eps = D / p
    ch = chart_for(masses, r.shape[1], chart)
    u_pre = xdot / sigma
    if ch.kind == "sphere":
        z = ch.jacobi(x)
        dz = _jacobi_linear(ch, u_pre)
        n = ch.hopf(*z)
        un = ch.hopf_tangent(z, dz)
        q = ShapePoint(n, "sphere")
        u = un
    else:
        q = ShapePoint(x, "preshape", weights=masses.ratios)
        u = u_pre
    sign = 1 if eps >= 0 else -1
    return ClassicalCurveState(q, Direction(u), kappa, sign, eps)


def _jacobi_linear(chart: SphereChart, vel):
    m1, m2, _ = chart.masses.mu
    w = vel[:, 0] + 1j * vel[:, 1]
    return chart.a1 * (w[1] - w[0]), chart.a2 * (w[2] - (m1 * w[0] + m2 * w[1]) / (m1 + m2))


def _angular_momentum(r, v, mu):
    if r.shape[1] == 2:
        return np.array([np.sum(mu * (r[:, 0] * v[:, 1] - r[:, 1] * v[:, 0]))])
    return np.sum(mu[:, None] * np.cross(r, v), axis=0)


def integrate_curve(initial: ClassicalCurveState, span: float, masses: MassProfile,
                    spec: PotentialSpec = PotentialSpec(), controls: Optional[IntegrationControls] = None,
                    model: str = "nbody", s0: float = 0.0) -> Curve:
    """Integrate the equation of state over ``span`` units of arc length.

    ``model`` is ``"nbody"`` or ``"geodesic"``.  A negative span runs the curve
    backwards.  Every accepted step is checked against the energy constraint and
    the run aborts with :class:`ConstraintViolation` beyond
    ``controls.tol_constraint``.  Crossings of ``eps = 0`` are located by
    bisection and stored as samples.
    """
    controls = controls or IntegrationControls()
    m = _model_for(masses, spec, initial.q)
    q0 = np.asarray(initial.q.coords, dtype=float)

    if model == "geodesic":
        y0 = np.concatenate([np.ravel(q0), np.ravel(initial.dir.u)])
        ss, ys, _ = dopri5(m.geodesic_vector_rhs, y0, s0, span, controls, project=m.geodesic_project)
        samples = []
        for s, y in zip(ss, ys):
            q, u = y[: m.n].reshape(m._shape), y[m.n :].reshape(m._shape)
            st = ClassicalCurveState(m.shape_point(q), Direction(u), initial.kappa, initial.eps_sign, None)
            samples.append(CurveSample(float(s), st, np.nan, np.nan, np.nan))
        return Curve(samples, model=m, kind="geodesic")
    if model != "nbody":
        raise ValueError(f"unknown model {model!r}")

    eps0 = initial.eps
    if eps0 is None:
        c0, _ = m.metric_gradient(q0)
        eps0 = epsilon(initial.kappa, c0, initial.eps_sign, controls.tol_constraint)
    y0 = m.pack(q0, initial.dir.u, initial.kappa, eps0)

    def check(s, y):
        q, _, kappa, eps = m.unpack(y)
        c, _ = m.metric_gradient(q)
        res = constraint_residual(kappa, c, eps)
        if abs(res) > controls.tol_constraint:
            raise ConstraintViolation(f"constraint residual {res:.3e} at s={s:.6g}")

    ss, ys, events = dopri5(
        m.rhs, y0, s0, span, controls, project=m.project,
        event=lambda y: y[-1], on_step=check,
    )
    return _samples(m, ss, ys, events, initial.eps_sign)


def _samples(m: ClassicalModel, ss, ys, events, sign0):
    samples = []
    for s, y in zip(ss, ys):
        q, u, kappa, eps = m.unpack(y)
        c, _ = m.metric_gradient(q)
        sign = int(np.sign(eps)) if eps != 0 else sign0
        st = ClassicalCurveState(m.shape_point(q), Direction(u.copy()), float(kappa), sign, float(eps))
        samples.append(CurveSample(float(s), st, float(eps), float(c), constraint_residual(kappa, c, eps)))
    return Curve(samples, model=m, events=events)
