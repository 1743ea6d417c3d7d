"""Emergent scale and duration recovered from an unparametrized shape curve.

Along an E = 0 curve the intrinsic data ``(q, u, kappa, eps)`` fix

    d log L / ds = eps,        d log p / ds = -u.grad C / kappa,
    dt / ds      = L^2 / p,

so the size of the system and the elapsed Newtonian time follow by quadrature
once a unit of length (``L0`` at an anchor sample) and a unit of time (the
duration between two anchor samples) are chosen.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConstraintViolation
from .geometry import PotentialSpec

__all__ = [
    "EphemerisRecord",
    "Ephemeris",
    "ReconstructedTrajectory",
    "cumulative_trapezoid",
    "ephemeris_scale",
    "ephemeris_duration",
    "ephemeris",
    "reconstruct_newtonian",
]


@dataclass(frozen=True)
class EphemerisRecord:
    s: float
    logL: float
    logp: float
    t: float


def cumulative_trapezoid(f, s) -> tuple[np.ndarray, float]:
    """Cumulative integral of samples ``f(s)`` on an uneven grid, with an error estimate.

    Each trapezoid cell gets the Hermite end correction ``h^2 (f'_0 - f'_1) / 12``
    with slopes from second-order finite differences, which lifts the rule to
    fourth order on smooth integrands.  The returned estimate is a Richardson
    check: the plain trapezoid on every sample against every other sample,
    whose difference bounds the uncorrected error from above.
    """
    f = np.asarray(f, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(f)
    if len(s) < 2:
        return out, 0.0
    h = np.diff(s)
    cells = 0.5 * h * (f[1:] + f[:-1])
    if len(s) >= 3:
        df = np.gradient(f, s, edge_order=2)
        cells = cells + h * h * (df[:-1] - df[1:]) / 12.0
    out[1:] = np.cumsum(cells)
    if len(s) < 5:
        return out, float("nan")
    plain = np.sum(0.5 * h * (f[1:] + f[:-1]))
    idx = np.arange(0, len(s), 2)
    if idx[-1] != len(s) - 1:
        idx = np.append(idx, len(s) - 1)
    coarse = np.sum(0.5 * np.diff(s[idx]) * (f[idx][1:] + f[idx][:-1]))
    return out, float(abs(plain - coarse) / 3.0)


def _check_radicand(curve, tol):
    kappa = curve.kappa
    C = curve.potential
    excess = 1.0 + 2.0 * C / kappa
    bad = np.flatnonzero(excess > tol)
    if bad.size:
        k = int(bad[0])
        raise ConstraintViolation(f"positive radicand {excess[k]:.3e} at sample {k} (s={curve[k].s:.6g})")


def _force_along(curve) -> np.ndarray:
    """``u.grad C`` at every sample, in the kinematic metric."""
    m = curve.model
    out = np.empty(len(curve))
    for i, smp in enumerate(curve):
        q = smp.state.q.coords
        _, G = m.metric_gradient(q)
        out[i] = m.chart.inner(q, G, smp.state.dir.u)
    return out


def ephemeris_scale(curve, anchor: int = 0, tol: float = 1e-6) -> np.ndarray:
    """``log(L / L0)`` at each sample, with ``L0`` the scale at ``curve[anchor]``.

    The carried ``eps`` already holds the branch sign, and the Janus crossing is
    itself a sample, so no quadrature cell straddles the sign change.
    """
    _check_radicand(curve, tol)
    logL, _ = cumulative_trapezoid(curve.eps, curve.s)
    return logL - logL[anchor]


def _log_shape_momentum(curve, anchor: int) -> np.ndarray:
    integrand = -_force_along(curve) / curve.kappa
    logp, _ = cumulative_trapezoid(integrand, curve.s)
    return logp - logp[anchor]


def ephemeris_duration(curve, anchor_pair: Sequence[int] = (0, -1), tol: float = 1e-6,
                       logL: Optional[np.ndarray] = None) -> np.ndarray:
    """Elapsed time at each sample in units of the anchor-pair duration.

    ``t`` is zero at the first anchor and one at the second.  The constant in
    ``p`` cancels in that ratio, which is why no separate momentum unit is needed.
    """
    a, b = (int(i) % len(curve) for i in anchor_pair)
    if a == b:
        raise ValueError("anchor pair must name two different samples")
    if logL is None:
        logL = ephemeris_scale(curve, a, tol)
    logp = _log_shape_momentum(curve, a)
    raw, _ = cumulative_trapezoid(np.exp(2.0 * logL - logp), curve.s)
    return (raw - raw[a]) / (raw[b] - raw[a])


@dataclass
class Ephemeris:
    """Scale, momentum and time along a curve, bound to the potential that produced it."""

    s: np.ndarray
    logL: np.ndarray
    logp: np.ndarray
    t: np.ndarray
    anchor: int
    anchor_pair: tuple[int, int]
    spec: PotentialSpec
    # dt/ds in the reported time unit, at every sample
    rate: np.ndarray
    error_estimate: dict

    @property
    def records(self) -> list[EphemerisRecord]:
        return [EphemerisRecord(float(a), float(b), float(c), float(d))
                for a, b, c, d in zip(self.s, self.logL, self.logp, self.t)]

    @property
    def scale(self) -> np.ndarray:
        return np.exp(self.logL)


def ephemeris(curve, anchor: int = 0, anchor_pair: Sequence[int] = (0, -1),
              tol: float = 1e-6) -> Ephemeris:
    """Both ephemeris equations at once, with Richardson error estimates."""
    n = len(curve)
    anchor = int(anchor) % n
    a, b = (int(i) % n for i in anchor_pair)
    _check_radicand(curve, tol)
    s = curve.s
    logL, errL = cumulative_trapezoid(curve.eps, s)
    logL = logL - logL[anchor]
    logp, errp = cumulative_trapezoid(-_force_along(curve) / curve.kappa, s)
    logp = logp - logp[anchor]
    integrand = np.exp(2.0 * logL - logp)
    raw, errt = cumulative_trapezoid(integrand, s)
    T = raw[b] - raw[a]
    t = (raw - raw[a]) / T
    return Ephemeris(
        s=s, logL=logL, logp=logp, t=t, anchor=anchor, anchor_pair=(a, b),
        spec=curve.model.spec, rate=integrand / T,
        error_estimate={"logL": errL, "logp": errp, "t": errt / abs(T)},
    )


@dataclass
class ReconstructedTrajectory:
    """Newtonian positions and velocities in units fixed by the ephemeris anchors."""

    t: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    masses: object


def _horizontal_lift_sphere(chart, points, tangents):
    """Unit-scale Jacobi pairs along the curve with zero angular momentum.

    Each sample's section is rotated to be closest to the previous one, the
    discrete form of horizontal transport along the Hopf fibration.
    """
    zs = np.empty((len(points), 2), dtype=complex)
    dzs = np.empty_like(zs)
    prev = None
    for i, (n, u) in enumerate(zip(points, tangents)):
        z = np.array(chart.section(n))
        if prev is not None:
            overlap = np.vdot(z, prev)
            if abs(overlap) > 0:
                z = z * (overlap / abs(overlap))
        zs[i] = z
        dzs[i] = _lift_tangent(chart, z, u)
        prev = z
    return zs, dzs


def _lift_tangent(chart, z, u):
    """The unique ``dz`` with ``Re<z,dz> = Im<z,dz> = 0`` pushing forward to ``u``."""
    basis = [np.array([1, 0]), np.array([1j, 0]), np.array([0, 1]), np.array([0, 1j])]
    cols = []
    for e in basis:
        dn = chart.hopf_tangent(z, e)
        inner = np.vdot(z, e)
        cols.append(np.concatenate([dn, [inner.real, inner.imag]]))
    M = np.array(cols).T  # 5 x 4, consistent system
    rhs = np.concatenate([u, [0.0, 0.0]])
    coef, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return coef[0] * basis[0] + coef[1] * basis[1] + coef[2] * basis[2] + coef[3] * basis[3]


def reconstruct_newtonian(curve, eph: Ephemeris, masses=None) -> ReconstructedTrajectory:
    """Embed the curve in Cartesian space at scale ``L(s)`` and time ``t(s)``.

    The result is a zero-angular-momentum Newtonian trajectory, determined up to
    a global similarity transformation and the choice of time unit.
    """
    chart = curve.model.chart
    masses = masses or chart.masses
    L = eph.scale
    eps = curve.eps
    rate = eph.rate
    if chart.kind == "sphere":
        zs, dzs = _horizontal_lift_sphere(chart, curve.points, curve.tangents)
        x = np.array([chart.positions_from_jacobi(*z) for z in zs])
        dx = np.array([chart.positions_from_jacobi(*dz) for dz in dzs])
    else:
        x = curve.points
        dx = curve.tangents
    pos = L[:, None, None] * x
    # dr/ds = L (eps x + dx/ds); dt/ds = rate
    vel = (L / rate)[:, None, None] * (eps[:, None, None] * x + dx)
    return ReconstructedTrajectory(eph.t.copy(), pos, vel, masses)
