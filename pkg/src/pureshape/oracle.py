"""Independent Cartesian Newtonian integrator used to check the shape-space curves.

Nothing here goes through the shape potential or the charts: forces come from
the pair law directly and the arc length is accumulated from the horizontal
(rotation- and dilation-free) part of the velocity.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from .errors import StepSizeUnderflow
from .geometry import Configuration, MassProfile, PotentialSpec

__all__ = [
    "OracleControls",
    "OracleTrajectory",
    "accelerations",
    "total_energy",
    "zero_energy_velocities",
    "newtonian_oracle",
]


@dataclass
class OracleControls:
    rtol: float = 1e-13
    atol: float = 1e-15
    method: str = "DOP853"
    samples: int = 4001


def _com(x, mu):
    return x - mu @ x / mu.sum()


def accelerations(r, mu, spec: PotentialSpec):
    """Softened Newtonian accelerations ``-grad_i V / mu_i``."""
    n = len(mu)
    rc = _com(r, mu)
    L2 = float(np.sum(mu[:, None] * rc * rc))
    soft2 = spec.softening**2
    acc = np.zeros_like(r)
    total = 0.0
    for i, j in combinations(range(n), 2):
        diff = r[i] - r[j]
        d2 = diff @ diff + soft2 * L2
        w = mu[i] * mu[j] * d2**-1.5
        acc[i] -= w * diff
        acc[j] += w * diff
        total += w
    if soft2:
        acc -= soft2 * total * mu[:, None] * rc
    return spec.beta * acc / mu[:, None]


def total_energy(r, v, mu, spec: PotentialSpec) -> float:
    kinetic = 0.5 * float(np.sum(mu[:, None] * v * v))
    return kinetic + Configuration(r, MassProfile(tuple(mu))).potential(spec)


def _angular(r, v, mu):
    if r.shape[1] == 2:
        return np.array([np.sum(mu * (r[:, 0] * v[:, 1] - r[:, 1] * v[:, 0]))])
    return np.sum(mu[:, None] * np.cross(r, v), axis=0)


def _rigid_velocity(r, mu, J):
    """Rigid-rotation velocity field carrying angular momentum ``J``."""
    if r.shape[1] == 2:
        inertia = float(np.sum(mu[:, None] * r * r))
        omega = J[0] / inertia
        return omega * np.stack([-r[:, 1], r[:, 0]], axis=1)
    inertia = sum(
        m * (np.dot(x, x) * np.eye(3) - np.outer(x, x)) for m, x in zip(mu, r)
    )
    omega = np.linalg.solve(inertia, J)
    return np.cross(omega, r)


def zero_energy_velocities(config: Configuration, velocities, spec: PotentialSpec = PotentialSpec(),
                           angular_momentum=None, dilation: Optional[float] = None):
    """Adjust velocities to zero momentum, prescribed angular momentum and E = 0.

    The rigid-rotation part is replaced by the one carrying ``angular_momentum``
    (default zero) and the remaining part is rescaled until ``T + V = 0``.  With
    ``dilation=0`` the radial (dilatational) part is removed first, which puts
    the system exactly at its Janus point.
    """
    mu = config.masses.mu
    r = _com(config.positions, mu)
    v = _com(np.asarray(velocities, dtype=float), mu)
    d = r.shape[1]
    J0 = _angular(r, v, mu)
    v = v - _rigid_velocity(r, mu, J0)
    if dilation is not None:
        L2 = float(np.sum(mu[:, None] * r * r))
        D = float(np.sum(mu[:, None] * r * v))
        v = v - (D - dilation) / L2 * r
    J = np.zeros(1 if d == 2 else 3) if angular_momentum is None else np.atleast_1d(angular_momentum)
    rot = _rigid_velocity(r, mu, J)
    t_free = 0.5 * float(np.sum(mu[:, None] * v * v))
    t_rot = 0.5 * float(np.sum(mu[:, None] * rot * rot))
    V = Configuration(r, config.masses).potential(spec)
    budget = -V - t_rot
    if budget <= 0 or t_free <= 0:
        raise ValueError("cannot reach E = 0 with this angular momentum")
    return np.sqrt(budget / t_free) * v + rot, r


@dataclass
class OracleTrajectory:
    t: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    arclength: np.ndarray
    masses: MassProfile
    spec: PotentialSpec
    dense: object

    @property
    def mu(self):
        return self.masses.mu

    @property
    def scale(self) -> np.ndarray:
        mu = self.mu
        return np.sqrt(np.einsum("i,tij,tij->t", mu, self.positions, self.positions))

    @property
    def dilatational_momentum(self) -> np.ndarray:
        return np.einsum("i,tij,tij->t", self.mu, self.positions, self.velocities)

    @property
    def shape_momentum(self) -> np.ndarray:
        """``p = L^2 ds/dt``."""
        return np.array([self.scale[k] ** 2 * _shape_speed(x, v, self.mu)
                         for k, (x, v) in enumerate(zip(self.positions, self.velocities))])

    @property
    def energy(self) -> np.ndarray:
        return np.array([total_energy(r, v, self.mu, self.spec) for r, v in zip(self.positions, self.velocities)])

    @property
    def angular_momentum(self) -> np.ndarray:
        return np.array([_angular(r, v, self.mu) for r, v in zip(self.positions, self.velocities)])

    def state_at_time(self, t):
        y = self.dense(t)
        n, d = self.positions.shape[1:]
        return y[: n * d].reshape(n, d), y[n * d : 2 * n * d].reshape(n, d), y[-1]

    def time_at_arclength(self, s):
        """Invert the monotone arc length ``s(t)`` with the dense solution."""
        from scipy.optimize import brentq

        s = np.atleast_1d(s)
        out = np.empty_like(s, dtype=float)
        tk, sk = self.t, self.arclength
        for i, target in enumerate(s):
            k = int(np.clip(np.searchsorted(sk, target), 1, len(sk) - 1))
            lo, hi = tk[k - 1], tk[k]
            if target <= sk[0]:
                out[i] = tk[0]
                continue
            if target >= sk[-1]:
                out[i] = tk[-1]
                continue
            out[i] = brentq(lambda tt: self.dense(tt)[-1] - target, lo, hi, xtol=1e-15, rtol=1e-15)
        return out

    def shapes(self, chart) -> np.ndarray:
        return np.array([chart.project(Configuration(r, self.masses)).coords for r in self.positions])


def _shape_speed(r, v, mu):
    """``|dx/dt|`` of the unit-scale representative with rotations removed."""
    L2 = float(np.sum(mu[:, None] * r * r))
    D = float(np.sum(mu[:, None] * r * v))
    rot = _rigid_velocity(r, mu, _angular(r, v, mu))
    w = v - rot
    kin = float(np.sum(mu[:, None] * w * w)) - D * D / L2
    return np.sqrt(max(kin, 0.0) / L2)


def newtonian_oracle(config: Configuration, velocities, spec: PotentialSpec = PotentialSpec(),
                     duration: Optional[float] = None, arclength: Optional[float] = None,
                     controls: OracleControls = OracleControls()) -> OracleTrajectory:
    """Integrate Newton's equations in the centre-of-mass frame.

    Stops after ``duration`` (time) or once the shape arc length reaches
    ``arclength``; negative values integrate backwards.  The shape arc length is
    carried as an extra state variable.
    """
    mu = config.masses.mu
    r0 = _com(config.positions, mu)
    v0 = _com(np.asarray(velocities, dtype=float), mu)
    n, d = r0.shape
    nd = n * d

    def rhs(t, y):
        r = y[:nd].reshape(n, d)
        v = y[nd : 2 * nd].reshape(n, d)
        a = accelerations(r, mu, spec)
        return np.concatenate([v.ravel(), a.ravel(), [_shape_speed(r, v, mu)]])

    y0 = np.concatenate([r0.ravel(), v0.ravel(), [0.0]])
    if arclength is not None:
        sgn = np.sign(arclength) or 1.0
        target = abs(arclength)
        event = lambda t, y: y[-1] - target
        event.terminal = True
        # generous time horizon; the arc-length event stops the run
        t_end = sgn * (duration if duration is not None else 1e6)
        sol = solve_ivp(lambda t, y: rhs(t, y) * np.r_[np.ones(2 * nd), sgn], (0.0, t_end), y0,
                        method=controls.method, rtol=controls.rtol, atol=controls.atol,
                        dense_output=True, events=event)
    else:
        # sqrt(kinetic) is not smooth where the shape is at rest (a homothetic orbit), and its
        # round-off noise would throttle the step control; the arc length is not needed to stop
        # the run, so it is left out of the error control and recomputed from the samples below
        atol = np.r_[np.full(2 * nd, controls.atol), np.inf]
        sol = solve_ivp(rhs, (0.0, duration), y0, method=controls.method, rtol=controls.rtol,
                        atol=atol, dense_output=True)
    if sol.status == -1:
        raise StepSizeUnderflow(sol.message)
    t_stop = sol.t[-1]
    ts = np.linspace(0.0, t_stop, controls.samples)
    ys = sol.sol(ts).T
    if arclength is None:
        speed = [_shape_speed(y[:nd].reshape(n, d), y[nd : 2 * nd].reshape(n, d), mu) for y in ys]
        ys[:, -1] = cumulative_trapezoid(speed, ts, initial=0.0)
    traj = OracleTrajectory(
        t=ts,
        positions=ys[:, :nd].reshape(-1, n, d),
        velocities=ys[:, nd : 2 * nd].reshape(-1, n, d),
        arclength=ys[:, -1],
        masses=config.masses,
        spec=spec,
        dense=sol.sol,
    )
    return traj
