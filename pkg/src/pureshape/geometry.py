"""Configurations, the similarity quotient, the kinematic metric and the shape potential.

Two charts are provided:

* :class:`SphereChart` -- the planar three-body shape sphere.  Points are unit
  3-vectors ``n``; the kinematic metric is ``g = |dn|^2 / 4`` (round sphere of
  radius 1/2).  Pairwise squared separations at unit scale are affine in ``n``,
  which makes the shape potential and its gradient closed-form.
* :class:`PreshapeChart` -- any N in 2 or 3 dimensions.  Points are
  mass-weighted, centred, unit-scale representatives; tangent vectors are kept
  horizontal (orthogonal to translations, rotations and dilations).

All vectors on the sphere chart are stored in the embedding R^3; "gradient"
means the Euclidean gradient projected onto the tangent plane.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import CollisionSingularity, DegenerateInput, TotalCollision

__all__ = [
    "MassProfile",
    "Configuration",
    "PotentialSpec",
    "ShapePoint",
    "KinematicMetric",
    "SphereChart",
    "PreshapeChart",
    "chart_for",
    "project_to_shape",
    "kinematic_metric_at",
    "shape_potential",
    "shape_potential_gradient",
    "random_shapes",
]

# r_ij^2 / L^2 below this counts as a collision when the potential is unsoftened
COLLISION_TOL = 1e-24


@dataclass(frozen=True)
class MassProfile:
    """Dimensionless mass ratios ``mu_i = m_i / M`` with ``M`` the mean mass."""

    ratios: tuple

    def __post_init__(self):
        mu = np.asarray(self.ratios, dtype=float)
        if mu.ndim != 1 or mu.size < 2:
            raise DegenerateInput("need at least two masses")
        if np.any(mu <= 0) or not np.all(np.isfinite(mu)):
            raise ValueError("mass ratios must be positive and finite")
        if abs(mu.sum() - mu.size) > 1e-12 * mu.size:
            raise ValueError(f"mass ratios must sum to N={mu.size}, got {mu.sum()!r}")
        object.__setattr__(self, "ratios", tuple(float(m) for m in mu))

    @classmethod
    def from_masses(cls, masses) -> "MassProfile":
        m = np.asarray(masses, dtype=float)
        if np.any(m <= 0):
            raise ValueError("masses must be positive")
        return cls(tuple(m / m.mean()))

    @classmethod
    def equal(cls, n: int) -> "MassProfile":
        return cls((1.0,) * n)

    @property
    def mu(self) -> np.ndarray:
        return np.array(self.ratios)

    def __len__(self):
        return len(self.ratios)


@dataclass(frozen=True)
class PotentialSpec:
    """Homogeneous potential ``V = beta * L**degree * C(q)``.

    ``softening`` replaces every ``r_ij`` with ``sqrt(r_ij**2 + softening**2 L**2)``,
    which keeps V homogeneous of the same degree.
    """

    beta: float = 1.0
    degree: int = -1
    softening: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.softening < 0:
            raise ValueError("softening must be non-negative")
        if self.degree != -1:
            # C(q) below is the Newtonian clustering potential; other degrees
            # would need a different pair law.
            raise NotImplementedError("only the Newtonian degree k=-1 is implemented")


@dataclass
class Configuration:
    positions: np.ndarray
    masses: MassProfile

    def __post_init__(self):
        self.positions = np.array(self.positions, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] not in (2, 3):
            raise ValueError("positions must have shape (N, d) with d in {2, 3}")
        if self.positions.shape[0] != len(self.masses):
            raise ValueError("one mass ratio per body is required")

    @property
    def n_bodies(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def centroid(self) -> np.ndarray:
        mu = self.masses.mu
        return mu @ self.positions / mu.sum()

    def centered(self) -> "Configuration":
        return Configuration(self.positions - self.centroid(), self.masses)

    def scale(self, weighted: bool = True) -> float:
        """Total scale L in the centre-of-mass frame.

        ``weighted=False`` gives the unweighted ``sum |r_I|^2`` convention; the
        dynamics always use the mass-weighted one.
        """
        r = self.positions - self.centroid()
        w = self.masses.mu if weighted else np.ones(self.n_bodies)
        return float(np.sqrt(np.sum(w[:, None] * r * r)))

    def potential(self, spec: PotentialSpec) -> float:
        """Newtonian ``V = -beta * sum mu_i mu_j / r_ij`` (softened) in Cartesian form."""
        r = self.positions
        mu = self.masses.mu
        soft2 = (spec.softening * self.scale()) ** 2
        v = 0.0
        for i, j in combinations(range(self.n_bodies), 2):
            d2 = np.sum((r[i] - r[j]) ** 2) + soft2
            v -= mu[i] * mu[j] / np.sqrt(d2)
        return spec.beta * v

    def transformed(self, rotation=None, scale=1.0, shift=None) -> "Configuration":
        r = self.positions
        if rotation is not None:
            r = r @ np.asarray(rotation).T
        r = scale * r
        if shift is not None:
            r = r + np.asarray(shift)
        return Configuration(r, self.masses)


@dataclass(frozen=True)
class ShapePoint:
    """A point of shape space in a given chart ("sphere" or "preshape")."""

    coords: np.ndarray
    chart: str = "sphere"
    gauge: str = ""
    weights: tuple | None = None

    def distance(self, other: "ShapePoint") -> float:
        if self.chart != other.chart:
            raise ValueError("cannot compare points from different charts")
        if self.chart == "sphere":
            return float(np.linalg.norm(self.coords - other.coords))
        return float(procrustes_distance(self.coords, other.coords, self.weights))


@dataclass(frozen=True)
class KinematicMetric:
    """Metric components ``g`` and inverse ``ginv`` in the coordinate frame ``basis``.

    ``basis[a]`` is the embedded tangent vector of the a-th coordinate direction.
    """

    g: np.ndarray
    ginv: np.ndarray
    basis: np.ndarray


def _rotation2(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


class SphereChart:
    """Planar three-body shape sphere built from mass-weighted Jacobi vectors.

    With ``z1 = a1 (r2 - r1)`` and ``z2 = a2 (r3 - c12)`` viewed as complex numbers
    the shape point is ``(|z1|^2 - |z2|^2, 2 Re z1 z2*, 2 Im z1 z2*) / (|z1|^2 + |z2|^2)``:
    equilateral triangles sit at the poles ``n3 = +-1``, collinear shapes on the
    equator ``n3 = 0``.
    """

    kind = "sphere"
    dim = 2
    embed_dim = 3
    # |v| of a unit tangent vector in the embedding, since g = |dn|^2/4
    unit_speed = 2.0
    # Gaussian curvature of the shape sphere
    curvature = 4.0

    def __init__(self, masses: MassProfile):
        if len(masses) != 3:
            raise DegenerateInput("the shape sphere needs exactly three bodies")
        self.masses = masses
        m1, m2, m3 = masses.mu
        m12 = m1 + m2
        tot = m12 + m3
        self.a1 = np.sqrt(m1 * m2 / m12)
        self.a2 = np.sqrt(m12 * m3 / tot)
        # (c1, c2) with r_j - r_i = c1 * z1 + c2 * z2, pairs (0,1), (0,2), (1,2)
        coef = np.array(
            [
                [1.0 / self.a1, 0.0],
                [m2 / (m12 * self.a1), 1.0 / self.a2],
                [-m1 / (m12 * self.a1), 1.0 / self.a2],
            ]
        )
        c1, c2 = coef[:, 0], coef[:, 1]
        # r_ij^2 / L^2 = const + lin . n
        self._pair_const = 0.5 * (c1**2 + c2**2)
        self._pair_lin = np.stack([0.5 * (c1**2 - c2**2), c1 * c2, np.zeros(3)], axis=1)
        self._pair_mass = np.array([m1 * m2, m1 * m3, m2 * m3])
        self._coef = coef

    # -- quotient map ---------------------------------------------------
    def jacobi(self, positions) -> tuple[complex, complex]:
        r = np.asarray(positions, dtype=float)
        if r.shape != (3, 2):
            raise ValueError("the shape sphere needs planar positions of shape (3, 2)")
        m1, m2, _ = self.masses.mu
        w = r[:, 0] + 1j * r[:, 1]
        z1 = self.a1 * (w[1] - w[0])
        z2 = self.a2 * (w[2] - (m1 * w[0] + m2 * w[1]) / (m1 + m2))
        return z1, z2

    def project(self, config: Configuration) -> ShapePoint:
        if config.n_bodies < 3:
            raise DegenerateInput("shape space needs at least three bodies")
        z1, z2 = self.jacobi(config.positions)
        return ShapePoint(self.hopf(z1, z2), "sphere")

    @staticmethod
    def hopf(z1, z2) -> np.ndarray:
        a, b = abs(z1) ** 2, abs(z2) ** 2
        norm = a + b
        if not norm > 0:
            raise TotalCollision("total collision has no shape")
        w = z1 * np.conj(z2)
        return np.array([a - b, 2 * w.real, 2 * w.imag]) / norm

    def hopf_tangent(self, z, dz) -> np.ndarray:
        """Push a configuration velocity ``dz = (dz1, dz2)`` forward to ``dn``."""
        z1, z2 = z
        dz1, dz2 = dz
        norm = abs(z1) ** 2 + abs(z2) ** 2
        n = self.hopf(z1, z2)
        dnorm = 2 * (np.conj(z1) * dz1).real + 2 * (np.conj(z2) * dz2).real
        dw = dz1 * np.conj(z2) + z1 * np.conj(dz2)
        dnum = np.array(
            [
                2 * (np.conj(z1) * dz1).real - 2 * (np.conj(z2) * dz2).real,
                2 * dw.real,
                2 * dw.imag,
            ]
        )
        return (dnum - n * dnorm) / norm

    def section(self, n) -> tuple[complex, complex]:
        """Unit-scale Jacobi pair mapping to ``n`` (one fixed representative)."""
        n = np.asarray(n, dtype=float)
        if n[0] >= 0:
            z1 = np.sqrt((1 + n[0]) / 2)
            z2 = (n[1] - 1j * n[2]) / (2 * z1)
        else:
            z2 = np.sqrt((1 - n[0]) / 2)
            z1 = (n[1] + 1j * n[2]) / (2 * z2)
        return complex(z1), complex(z2)

    def positions_from_jacobi(self, z1, z2) -> np.ndarray:
        m1, m2, m3 = self.masses.mu
        m12 = m1 + m2
        tot = m12 + m3
        rho1 = z1 / self.a1
        rho2 = z2 / self.a2
        c12 = -m3 / tot * rho2
        w = np.array([c12 - m2 / m12 * rho1, c12 + m1 / m12 * rho1, m12 / tot * rho2])
        return np.stack([w.real, w.imag], axis=1)

    def representative(self, n, scale: float = 1.0) -> np.ndarray:
        z1, z2 = self.section(n)
        return scale * self.positions_from_jacobi(z1, z2)

    # -- manifold bookkeeping --------------------------------------------
    @staticmethod
    def normalize(n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return n / np.linalg.norm(n)

    @staticmethod
    def tangent_project(n, v) -> np.ndarray:
        return v - np.dot(v, n) * n

    def inner(self, n, a, b) -> float:
        return 0.25 * float(np.dot(a, b))

    def distance(self, n1, n2) -> float:
        """Chordal distance between unit vectors (twice the kinematic distance, to first order)."""
        return float(np.linalg.norm(np.asarray(n1) - np.asarray(n2)))

    # -- metric -----------------------------------------------------------
    @staticmethod
    def angles(n) -> tuple[float, float]:
        """Chart angles with polar axis n1, so the equilateral poles are regular points."""
        n = np.asarray(n, dtype=float)
        theta = np.arccos(np.clip(n[0], -1.0, 1.0))
        varphi = np.arctan2(n[2], n[1])
        return float(theta), float(varphi)

    @staticmethod
    def from_angles(theta, varphi) -> np.ndarray:
        return np.array(
            [np.cos(theta), np.sin(theta) * np.cos(varphi), np.sin(theta) * np.sin(varphi)]
        )

    def coordinate_basis(self, n) -> np.ndarray:
        theta, varphi = self.angles(n)
        e_theta = np.array(
            [-np.sin(theta), np.cos(theta) * np.cos(varphi), np.cos(theta) * np.sin(varphi)]
        )
        e_varphi = np.sin(theta) * np.array([0.0, -np.sin(varphi), np.cos(varphi)])
        return np.stack([e_theta, e_varphi])

    def metric(self, n) -> KinematicMetric:
        basis = self.coordinate_basis(n)
        g = 0.25 * basis @ basis.T
        if np.linalg.det(g) < 1e-28:
            raise CollisionSingularity("chart pole: angular coordinates are singular here")
        return KinematicMetric(g, np.linalg.inv(g), basis)

    def direction_angle(self, n, v) -> float:
        """Angle of the tangent ``v`` measured from e_theta towards e_varphi."""
        basis = self.coordinate_basis(n)
        e_t = basis[0]
        e_v = np.cross(n, e_t)
        return float(np.arctan2(np.dot(v, e_v), np.dot(v, e_t)))

    # -- potential ----------------------------------------------------------
    def pair_separations2(self, n) -> np.ndarray:
        """``r_ij^2 / L^2`` for pairs (12, 13, 23); ``n`` may be (..., 3)."""
        return self._pair_const + np.asarray(n) @ self._pair_lin.T

    def _softened(self, n, spec):
        d2 = self.pair_separations2(n) + spec.softening**2
        if spec.softening == 0 and np.any(d2 <= COLLISION_TOL):
            raise CollisionSingularity("two-body collision with unsoftened potential")
        return d2

    def potential(self, n, spec: PotentialSpec):
        """Shape potential ``C = -sum mu_i mu_j L / r_ij`` (vectorised over leading axes)."""
        d2 = self._softened(n, spec)
        return -np.sum(self._pair_mass / np.sqrt(d2), axis=-1)

    def gradient(self, n, spec: PotentialSpec) -> np.ndarray:
        """Tangential Euclidean gradient of C on the unit sphere."""
        n = np.asarray(n, dtype=float)
        d2 = self._softened(n, spec)
        full = (0.5 * self._pair_mass * d2**-1.5) @ self._pair_lin
        return full - np.dot(full, n) * n

    def hessian_free_potential_and_gradient(self, n, spec):
        n = np.asarray(n, dtype=float)
        d2 = self._softened(n, spec)
        c = -np.sum(self._pair_mass / np.sqrt(d2))
        full = (0.5 * self._pair_mass * d2**-1.5) @ self._pair_lin
        return c, full - np.dot(full, n) * n

    def collision_points(self) -> np.ndarray:
        """Shape points of the three binary collisions (pairs 12, 13, 23)."""
        pts = []
        for const, lin in zip(self._pair_const, self._pair_lin):
            # r_ij^2 = const + lin.n vanishes at n = -lin/|lin| (const == |lin|)
            pts.append(-lin / np.linalg.norm(lin))
        return np.array(pts)


class PreshapeChart:
    """Gauge-fixed, mass-weighted, unit-scale representatives for any N and d.

    The gauge puts body-frame axes along a Gram-Schmidt sequence of body
    positions, so it is deterministic and continuous away from measure-zero
    degeneracies.  Shape distances use Procrustes alignment and never depend
    on the gauge.
    """

    kind = "preshape"
    unit_speed = 1.0

    def __init__(self, masses: MassProfile, d: int):
        if d not in (2, 3):
            raise ValueError("d must be 2 or 3")
        if len(masses) < 3:
            raise DegenerateInput("shape space needs at least three bodies")
        self.masses = masses
        self.d = d
        self.n_bodies = len(masses)
        self.dim = d * self.n_bodies - d - d * (d - 1) // 2 - 1
        self._mu = masses.mu
        self._pairs = list(combinations(range(self.n_bodies), 2))

    # -- quotient map -------------------------------------------------------
    def normalize(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(self.n_bodies, self.d)
        x = x - self._mu @ x / self._mu.sum()
        scale = np.sqrt(np.sum(self._mu[:, None] * x * x))
        if not scale > 0:
            raise TotalCollision("total collision has no shape")
        return x / scale

    def gauge_fix(self, x) -> np.ndarray:
        x = self.normalize(x)
        frame = []
        tol = 1e-8
        for r in x:
            w = r.copy()
            for e in frame:
                w -= np.dot(w, e) * e
            nw = np.linalg.norm(w)
            if nw > tol:
                frame.append(w / nw)
            if len(frame) == self.d - 1:
                break
        if len(frame) < self.d - 1:
            # all bodies on a line through the origin (d=3): complete arbitrarily
            seed = np.eye(self.d)[np.argmin(np.abs(frame[0]))]
            w = seed - np.dot(seed, frame[0]) * frame[0]
            frame.append(w / np.linalg.norm(w))
        if self.d == 2:
            e1 = frame[0]
            frame = [e1, np.array([-e1[1], e1[0]])]
        else:
            frame.append(np.cross(frame[0], frame[1]))
        rot = np.stack(frame)
        return x @ rot.T

    def project(self, config: Configuration) -> ShapePoint:
        if config.n_bodies < 3:
            raise DegenerateInput("shape space needs at least three bodies")
        return ShapePoint(
            self.gauge_fix(config.positions), "preshape", gauge="gram-schmidt",
            weights=self.masses.ratios,
        )

    def representative(self, x, scale: float = 1.0) -> np.ndarray:
        return scale * np.asarray(x).reshape(self.n_bodies, self.d)

    # -- geometry -------------------------------------------------------------
    def inner(self, x, a, b) -> float:
        a = np.asarray(a).reshape(self.n_bodies, self.d)
        b = np.asarray(b).reshape(self.n_bodies, self.d)
        return float(np.sum(self._mu[:, None] * a * b))

    def vertical_basis(self, x) -> np.ndarray:
        """Generators of translations, rotations and dilations at ``x``."""
        x = np.asarray(x).reshape(self.n_bodies, self.d)
        gens = []
        for k in range(self.d):
            t = np.zeros_like(x)
            t[:, k] = 1.0
            gens.append(t)
        if self.d == 2:
            gens.append(np.stack([-x[:, 1], x[:, 0]], axis=1))
        else:
            for k in range(3):
                axis = np.eye(3)[k]
                gens.append(np.cross(axis, x))
        gens.append(x.copy())
        return np.array(gens)

    def horizontal_project(self, x, v) -> np.ndarray:
        x = np.asarray(x).reshape(self.n_bodies, self.d)
        v = np.asarray(v, dtype=float).reshape(self.n_bodies, self.d)
        gens = self.vertical_basis(x).reshape(-1, self.n_bodies * self.d)
        w = np.repeat(self._mu, self.d)
        gram = (gens * w) @ gens.T
        rhs = (gens * w) @ v.ravel()
        coef = np.linalg.lstsq(gram, rhs, rcond=None)[0]
        return (v.ravel() - coef @ gens).reshape(self.n_bodies, self.d)

    def tangent_project(self, x, v) -> np.ndarray:
        return self.horizontal_project(x, v)

    def horizontal_basis(self, x) -> np.ndarray:
        """Orthonormal (in the mass metric) basis of the horizontal space at ``x``."""
        x = np.asarray(x).reshape(self.n_bodies, self.d)
        size = self.n_bodies * self.d
        sq = np.sqrt(np.repeat(self._mu, self.d))
        gens = self.vertical_basis(x).reshape(-1, size) * sq
        # orthonormal complement of the generators in mass-weighted coordinates
        _, s, vt = np.linalg.svd(gens)
        rank = int(np.sum(s > 1e-10 * s[0]))
        comp = vt[rank:]
        return (comp / sq).reshape(-1, self.n_bodies, self.d)

    def metric(self, x) -> KinematicMetric:
        basis = self.horizontal_basis(x)
        flat = basis.reshape(len(basis), -1)
        w = np.repeat(self._mu, self.d)
        g = (flat * w) @ flat.T
        return KinematicMetric(g, np.linalg.inv(g), basis)

    def distance(self, x, y) -> float:
        return procrustes_distance(x, y, self._mu)

    # -- potential --------------------------------------------------------------
    def _pair_data(self, x, spec):
        x = np.asarray(x).reshape(self.n_bodies, self.d)
        i, j = np.array(self._pairs).T
        diff = x[i] - x[j]
        d2 = np.sum(diff * diff, axis=1)
        if spec.softening == 0 and np.any(d2 <= COLLISION_TOL):
            raise CollisionSingularity("two-body collision with unsoftened potential")
        return x, i, j, diff, d2 + spec.softening**2

    def potential(self, x, spec: PotentialSpec) -> float:
        _, i, j, _, d2 = self._pair_data(x, spec)
        return float(-np.sum(self._mu[i] * self._mu[j] / np.sqrt(d2)))

    def gradient(self, x, spec: PotentialSpec) -> np.ndarray:
        """Horizontal metric gradient of C at a unit-scale representative."""
        x, i, j, diff, d2 = self._pair_data(x, spec)
        mm = self._mu[i] * self._mu[j]
        # C(r) = -L sum mm / sqrt(r_ij^2 + s^2 L^2); differentiate at L = 1
        coef = mm * d2**-1.5
        grad = np.zeros_like(x)
        np.add.at(grad, i, coef[:, None] * diff)
        np.add.at(grad, j, -coef[:, None] * diff)
        c = -np.sum(mm / np.sqrt(d2))
        dL = self._mu[:, None] * x  # dL/dr at L = 1
        dsoft = np.sum(mm * d2**-1.5) * spec.softening**2
        grad += (c + dsoft) * dL
        grad /= self._mu[:, None]
        return self.horizontal_project(x, grad)

    def hessian_free_potential_and_gradient(self, x, spec):
        return self.potential(x, spec), self.gradient(x, spec)


def procrustes_distance(x, y, mu=None) -> float:
    """Kendall (full Procrustes) angle between two shapes, rotations only."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones(len(x)) if mu is None else np.asarray(mu)
    def prep(z):
        z = z - w @ z / w.sum()
        z = z * np.sqrt(w)[:, None]
        return z / np.linalg.norm(z)
    a, b = prep(x), prep(y)
    u, s, vt = np.linalg.svd(a.T @ b)
    if np.linalg.det(u @ vt) < 0:
        s[-1] = -s[-1]
    return float(np.arccos(np.clip(s.sum(), -1.0, 1.0)))


def chart_for(masses: MassProfile, d: int = 2, kind: str = "auto"):
    if kind == "auto":
        kind = "sphere" if (len(masses) == 3 and d == 2) else "preshape"
    if kind == "sphere":
        return SphereChart(masses)
    if kind == "preshape":
        return PreshapeChart(masses, d)
    raise ValueError(f"unknown chart {kind!r}")


def project_to_shape(config: Configuration, chart: str = "auto") -> ShapePoint:
    if config.n_bodies < 3:
        raise DegenerateInput("shape space needs at least three bodies")
    if not config.scale() > 0:
        raise TotalCollision("total collision has no shape")
    return chart_for(config.masses, config.dim, chart).project(config)


def _chart_of(q: ShapePoint, masses: MassProfile):
    if q.chart == "sphere":
        return SphereChart(masses)
    n, d = q.coords.shape
    return PreshapeChart(masses, d)


def kinematic_metric_at(q: ShapePoint, masses: MassProfile) -> KinematicMetric:
    return _chart_of(q, masses).metric(q.coords)


def shape_potential(q: ShapePoint, masses: MassProfile, spec: PotentialSpec = PotentialSpec()) -> float:
    """C(q) = V(r) / (beta L^k) for any representative r of q."""
    return float(_chart_of(q, masses).potential(q.coords, spec))


def shape_potential_gradient(
    q: ShapePoint, masses: MassProfile, spec: PotentialSpec = PotentialSpec()
) -> np.ndarray:
    return _chart_of(q, masses).gradient(q.coords, spec)


def random_shapes(rng: np.random.Generator, count: int) -> np.ndarray:
    """Points uniformly distributed on the unit shape sphere."""
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
