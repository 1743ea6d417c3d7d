"""Pilot-wave equation of state on the planar three-body shape sphere.

The integrated state is the actual shape ``Q`` with its unit direction ``u``,
the intrinsic acceleration ``kappa`` and the amplitude/phase fields ``R``, ``S``
sampled on a :class:`~pureshape.sht.SphereGrid`.  Per unit arc length

    dQ     = u
    du     = geodesic term - (grad V_T - (u.grad V_T) u) / kappa
    dkappa = -2 u.grad V_T + K~
    dR     = -(g(grad R, grad S) + R Lap S / 2) / sqrt(kappa)
    dS     = -(g(grad S, grad S) / 2 + V_T) / sqrt(kappa)

with ``V_T = C + k V_q`` and ``V_q = -Lap R / (2 R)``.  The branch term
``K~ = -alpha kappa sign sqrt(-(1 + 2 V_T(Q) / kappa))`` is the one that turns
the curve equations into the classical ones when ``V_q`` vanishes.  Setting
``QuantumParams.branch_term=False`` switches it off, which is the decoupled
(subsystem) regime where the guidance relation ``sqrt(kappa) u = grad S``
propagates exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classical import ClassicalModel, Direction
from .errors import (
    AmplitudeFloorBreach,
    ConstraintViolation,
    DegenerateInput,
    KappaUnderflow,
    ResolutionExceeded,
)
from .geometry import MassProfile, PotentialSpec, ShapePoint, SphereChart
from .integrate import StepControls, dopri5
from .sht import SphereGrid

__all__ = [
    "QuantumParams",
    "QuantumState",
    "QuantumCurveState",
    "QuantumSample",
    "QuantumCurve",
    "QuantumModel",
    "quantum_potential",
    "total_potential",
    "dbb_rhs",
    "tilde_K",
    "guidance_residual",
    "seed_from_phase",
    "integrate_quantum_curve",
    "field_controls",
]


@dataclass(frozen=True)
class QuantumParams:
    k_coupling: float = 1.0
    # homogeneity degree of the potential; Newtonian gravity has k + 2 = 1
    alpha: float = 1.0
    floor: float = 1e-10
    branch_term: bool = True
    tol_constraint: float = 1e-6
    # fraction of the grid's harmonic degrees the fields may occupy (2/3 rule)
    band_fraction: float = 2.0 / 3.0
    # largest tolerated amplitude share of the top quarter of the band
    resolution_tol: float = 1e-3

    def __post_init__(self):
        if not self.k_coupling >= 0:
            raise ValueError("k_coupling must be non-negative")
        if not self.floor >= 0:
            raise ValueError("floor must be non-negative")
        if not 0.0 < self.band_fraction <= 1.0:
            raise ValueError("band_fraction must lie in (0, 1]")

    def check_spec(self, spec: PotentialSpec):
        """The classical limit needs alpha equal to the classical degree k + 2."""
        if abs(self.alpha - (spec.degree + 2)) > 1e-12:
            raise ValueError(f"alpha={self.alpha} does not match the classical degree {spec.degree + 2}")


@dataclass
class QuantumState:
    """Amplitude and phase sampled on the grid nodes."""

    R: np.ndarray
    S: np.ndarray
    grid: SphereGrid

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float).reshape(self.grid.shape)
        self.S = np.asarray(self.S, dtype=float).reshape(self.grid.shape)
        if np.any(self.R < 0):
            raise ValueError("amplitude must be non-negative")

    @property
    def norm(self) -> float:
        return self.grid.integrate(self.R**2)

    def normalized(self) -> "QuantumState":
        return QuantumState(self.R / math.sqrt(self.norm), self.S.copy(), self.grid)

    @classmethod
    def rotating_dipole(cls, grid: SphereGrid, strength: float = 0.5, hbar: float = 1.0,
                        axis: int = 2) -> "QuantumState":
        """``psi = 1 + c (n_a + i n_b)`` about the chosen axis, normalized.

        For ``|c| < 1`` the wave has no nodes, and without a potential it simply
        rotates about the axis, so ``R`` and ``S`` stay smooth and low-degree.
        """
        if not 0 <= strength < 1:
            raise ValueError("dipole strength must lie in [0, 1) to keep psi free of nodes")
        n = grid.nodes
        a, b = [i for i in range(3) if i != axis]
        psi = 1.0 + strength * (n[..., a] + 1j * n[..., b])
        return cls(np.abs(psi), hbar * np.angle(psi), grid).normalized()

    @classmethod
    def from_functions(cls, grid: SphereGrid, R, S, normalize: bool = True) -> "QuantumState":
        """Sample callables of the unit shape-sphere point ``n`` (vectorised over ``(..., 3)``)."""
        nodes = grid.nodes
        st = cls(np.broadcast_to(R(nodes), grid.shape).copy(), np.broadcast_to(S(nodes), grid.shape).copy(), grid)
        return st.normalized() if normalize else st


@dataclass
class QuantumCurveState:
    Q: ShapePoint
    dir: Direction
    kappa: float
    psi: QuantumState
    eps_sign: int = 1

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")


@dataclass(frozen=True)
class QuantumSample:
    s: float
    Q: np.ndarray
    u: np.ndarray
    kappa: float
    V_T: float
    norm: float
    guidance_residual: float
    eps: float


class QuantumCurve(list):
    """Per-step samples plus the final field state."""

    def __init__(self, samples=(), *, final=None, model=None):
        super().__init__(samples)
        self.final = final
        self.model = model

    def _col(self, name):
        return np.array([getattr(x, name) for x in self])

    s = property(lambda self: self._col("s"))
    points = property(lambda self: self._col("Q"))
    tangents = property(lambda self: self._col("u"))
    kappa = property(lambda self: self._col("kappa"))
    norm = property(lambda self: self._col("norm"))
    guidance = property(lambda self: self._col("guidance_residual"))
    potential = property(lambda self: self._col("V_T"))
    eps = property(lambda self: self._col("eps"))


@dataclass
class _Fields:
    """Spectral data of one ``(R, S)`` pair."""

    cR: np.ndarray
    cS: np.ndarray
    R: np.ndarray
    lapR: np.ndarray
    lapS: np.ndarray
    Vq: np.ndarray
    mask: np.ndarray
    rmax: float


class QuantumModel:
    """Right-hand side of the pilot-wave equation of state on one grid."""

    def __init__(self, grid: SphereGrid, masses: MassProfile = MassProfile.equal(3),
                 spec: PotentialSpec = PotentialSpec(), params: QuantumParams = QuantumParams()):
        if len(masses) != 3:
            raise DegenerateInput("the quantum chart is the planar three-body shape sphere")
        params.check_spec(spec)
        if not spec.softening > 0:
            raise DegenerateInput("the field equations need a softened potential: "
                                  "the bare one is not band-limited at the collision points")
        self.grid = grid
        self.masses = masses
        self.spec = spec
        self.params = params
        self.chart = SphereChart(masses)
        self.classical = ClassicalModel(self.chart, spec)
        self.C_nodes = self.chart.potential(grid.nodes, spec)
        self.nf = grid.n_theta * grid.n_phi
        self.band = int(math.floor(params.band_fraction * grid.lmax + 1e-9))
        self.dealias = (np.arange(grid.lmax + 1) <= self.band).astype(float)
        # integrated fields are stored as their band coefficients: m = 0 real parts, then
        # sqrt(2) (Re, Im) for m > 0, so a vector's squared length is the unit-sphere L2 norm
        mm, ll = np.meshgrid(np.arange(self.band + 1), np.arange(self.band + 1), indexing="ij")
        keep = ll >= mm
        self._zonal = np.flatnonzero((keep & (mm == 0)).ravel())
        self._sectoral = np.flatnonzero((keep & (mm > 0)).ravel())
        self.nz = len(self._zonal) + 2 * len(self._sectoral)

    # -- fields ----------------------------------------------------------------
    def fields(self, R, S) -> _Fields:
        """Spectral data of grid values ``R``, ``S``."""
        g = self.grid
        cR, cS = g.analyze(np.stack([R, S]))
        lapR, lapS = g.synthesize(g.laplacian_coef(np.stack([cR, cS])))
        return self._assemble(cR, cS, np.asarray(R, dtype=float), lapR, lapS)

    def fields_from_coef(self, cR, cS) -> _Fields:
        """Spectral data of coefficient arrays; ``R`` is synthesized alongside the Laplacians."""
        g = self.grid
        R, lapR, lapS = g.synthesize(np.stack([cR, g.laplacian_coef(cR), g.laplacian_coef(cS)]))
        return self._assemble(cR, cS, R, lapR, lapS)

    def _assemble(self, cR, cS, R, lapR, lapS) -> _Fields:
        rmax = float(np.max(R))
        mask = R >= self.params.floor * rmax
        Vq = np.zeros_like(R)
        Vq[mask] = -lapR[mask] / (2.0 * R[mask])
        return _Fields(cR, cS, R, lapR, lapS, Vq, mask, rmax)

    def quantum_potential(self, psi: QuantumState, strict: bool = False) -> np.ndarray:
        f = self.fields(psi.R, psi.S)
        if strict and not np.all(f.mask):
            raise AmplitudeFloorBreach(f"{int(np.sum(~f.mask))} nodes below the amplitude floor")
        return f.Vq

    def total_potential_nodes(self, f: _Fields) -> np.ndarray:
        return self.C_nodes + self.params.k_coupling * f.Vq

    def at_point(self, f: _Fields, Q):
        """``V_T(Q)`` and its metric gradient (embedded), plus the phase gradient at ``Q``."""
        g = self.grid
        basis = g.point(Q, f.cR.shape[-1] - 1)
        c, grad_c = self.chart.hessian_free_potential_and_gradient(Q, self.spec)
        vt = c
        grad = grad_c
        k = self.params.k_coupling
        if k != 0.0:
            R = basis.value(f.cR)
            if R < self.params.floor * f.rmax:
                raise AmplitudeFloorBreach(f"R(Q)={R:.3e} below the amplitude floor")
            cL = g.laplacian_coef(f.cR)
            lap = basis.value(cL)
            dR = basis.gradient(f.cR)
            dlap = basis.gradient(cL)
            vt = vt - k * lap / (2.0 * R)
            grad = grad + k * (-dlap / (2.0 * R) + lap * dR / (2.0 * R * R))
        # metric gradient on the radius-1/2 sphere: g^{ab} f_,b = 4 * unit-sphere gradient
        G = self.chart.unit_speed**2 * grad
        GS = self.chart.unit_speed**2 * basis.gradient(f.cS)
        return vt, G, GS

    def tilde_K(self, kappa, vt, sign) -> float:
        if not self.params.branch_term or self.params.alpha == 0:
            return 0.0
        excess = 1.0 + 2.0 * vt / kappa
        if excess > self.params.tol_constraint:
            raise ConstraintViolation(f"1 + 2 V_T(Q)/kappa = {excess:.3e} > 0")
        return -self.params.alpha * kappa * sign * math.sqrt(max(-excess, 0.0))

    # -- flat state ----------------------------------------------------------------
    def to_vector(self, coef) -> np.ndarray:
        """Band coefficients ``[..., m, l]`` as real vectors ``[..., nz]`` (the rest is dropped)."""
        n = self.band + 1
        coef = np.asarray(coef)[..., :n, :n]
        flat = coef.reshape(coef.shape[:-2] + (-1,))
        sect = math.sqrt(2.0) * flat[..., self._sectoral]
        return np.concatenate([flat[..., self._zonal].real, sect.real, sect.imag], axis=-1)

    def from_vector(self, z) -> np.ndarray:
        """Inverse of :meth:`to_vector`: coefficient arrays truncated to the band."""
        z = np.asarray(z, dtype=float)
        n0, n1 = len(self._zonal), len(self._sectoral)
        size = self.band + 1
        flat = np.zeros(z.shape[:-1] + (size * size,), dtype=complex)
        flat[..., self._zonal] = z[..., :n0]
        flat[..., self._sectoral] = (z[..., n0 : n0 + n1] + 1j * z[..., n0 + n1 :]) / math.sqrt(2.0)
        return flat.reshape(z.shape[:-1] + (size, size))

    def pack(self, Q, u, kappa, zR, zS):
        return np.concatenate([Q, u, [kappa], zR, zS])

    def unpack(self, y):
        nz = self.nz
        return y[:3], y[3:6], y[6], y[7 : 7 + nz], y[7 + nz :]

    def blocks(self):
        nz = self.nz
        return [slice(0, 3), slice(3, 6), slice(6, 7), slice(7, 7 + nz), slice(7 + nz, 7 + 2 * nz)]

    def error_norm(self, err, y, y_new, rtol, atol) -> float:
        """Worst block error: componentwise RMS for the curve, relative L2 for each field."""
        worst = 0.0
        for b in self.blocks()[:3]:
            scale = atol + rtol * np.maximum(np.abs(y[b]), np.abs(y_new[b]))
            worst = max(worst, float(np.sqrt(np.mean((err[b] / scale) ** 2))))
        # the sphere RMS of a field is its vector length over sqrt(4 pi)
        unit = math.sqrt(4.0 * math.pi)
        for b in self.blocks()[3:]:
            size = max(np.linalg.norm(y[b]), np.linalg.norm(y_new[b])) / unit
            worst = max(worst, float(np.linalg.norm(err[b]) / unit / (atol + rtol * size)))
        return worst

    def project(self, y):
        Q, u = y[:3], y[3:6]
        Q = Q / np.linalg.norm(Q)
        u = u - (u @ Q) * Q
        u = u * (self.chart.unit_speed / np.linalg.norm(u))
        out = y.copy()
        out[:3], out[3:6] = Q, u
        return out

    def rhs_parts(self, Q, u, kappa, R, S, sign):
        """Tendencies of grid-valued fields, projected onto the resolved band."""
        du, dkappa, dR, dS = self._tendencies(Q, u, kappa, self.fields(R, S), sign)
        g = self.grid
        dR, dS = g.synthesize(self.filter(g.analyze(np.stack([dR, dS]))))
        return u.copy(), du, dkappa, dR, dS

    def _tendencies(self, Q, u, kappa, f: _Fields, sign):
        """Curve tendencies and the raw (unfiltered) field tendencies at the nodes."""
        if not kappa > 1e-12:
            raise KappaUnderflow(f"kappa={kappa!r} underflow")
        vt, G, _ = self.at_point(f, Q)
        ch = self.chart
        dVu = ch.inner(Q, G, u)
        du = self.classical.geodesic_accel(Q, u) - (G - dVu * u) / kappa
        dkappa = -2.0 * dVu + self.tilde_K(kappa, vt, sign)
        root = 1.0 / math.sqrt(kappa)
        g = self.grid
        (tR, tS), (pR, pS) = g.gradient_components(np.stack([f.cR, f.cS]))
        inv_r2 = 1.0 / g.radius**2
        dR = -root * (inv_r2 * (tR * tS + pR * pS) + 0.5 * f.R * f.lapS)
        dS = -root * (0.5 * inv_r2 * (tS * tS + pS * pS) + self.total_potential_nodes(f))
        return du, dkappa, dR, dS

    def filter(self, coef):
        return coef * self.dealias

    def spectral_tail(self, R, S) -> float:
        """Amplitude share of the top quarter of the resolved band, worst of ``R`` and ``S``.

        The mean of each field (degree 0) is left out: a uniform phase shift is
        not structure the grid has to resolve.
        """
        return self.coefficient_tail(self.grid.analyze(np.stack([R, S])))

    def coefficient_tail(self, coef) -> float:
        """:meth:`spectral_tail` from stacked coefficients ``[cR, cS]``."""
        weight = np.where(np.arange(coef.shape[-2]) == 0, 1.0, 2.0)[:, None]
        power = np.sum(weight * np.abs(coef) ** 2, axis=-2)  # per degree
        # structure below 1e-10 of the amplitude's size is round-off, not something to resolve
        floor = max(1e-20 * float(power[0].sum()), 1e-300)
        power[:, 0] = 0.0
        top = power[:, self.band - self.band // 4 : self.band + 1].sum(axis=1)
        total = np.maximum(power[:, : self.band + 1].sum(axis=1), floor)
        return float(np.sqrt(np.max(top / total)))

    def band_limit(self, field):
        """Project grid values onto the resolved harmonic band."""
        return self.grid.synthesize(self.filter(self.grid.analyze(field)))

    def resolve(self, psi: QuantumState) -> QuantumState:
        """``psi`` projected onto the resolved band and renormalized.

        The integrated fields live in the band, so a seed taken from the
        projected phase starts with zero guidance residual.
        """
        R, S = self.grid.synthesize(self.filter(self.grid.analyze(np.stack([psi.R, psi.S]))))
        if np.any(R <= 0):
            raise AmplitudeFloorBreach("the band-limited amplitude has nodes; refine the grid")
        return QuantumState(R, S, psi.grid).normalized()

    def state_fields(self, y) -> _Fields:
        _, _, _, zR, zS = self.unpack(y)
        cR, cS = self.from_vector(np.stack([zR, zS]))
        return self.fields_from_coef(cR, cS)

    def rhs(self, y, sign):
        """Derivative of a packed state; truncating the field tendencies to the band
        keeps the fields inside it (products alias above it, and the fastest
        dispersive modes set the explicit step limit)."""
        Q, u, kappa, _, _ = self.unpack(y)
        du, dkappa, dR, dS = self._tendencies(Q, u, kappa, self.state_fields(y), sign)
        dzR, dzS = self.to_vector(self.grid.analyze(np.stack([dR, dS]), lmax=self.band))
        return self.pack(u, du, dkappa, dzR, dzS)

    def guidance_residual(self, Q, u, kappa, f: _Fields) -> float:
        _, _, GS = self.at_point(f, Q)
        return 0.5 * float(np.linalg.norm(math.sqrt(kappa) * u - GS))


# -- functional interface -------------------------------------------------------------
def _model(grid, masses, spec, params):
    return QuantumModel(grid, masses, spec, params)


def quantum_potential(psi: QuantumState, grid: Optional[SphereGrid] = None, strict: bool = False) -> np.ndarray:
    """``V_q = -Lap R / (2R)`` at the nodes; nodes under the amplitude floor get 0.

    With ``strict=True`` any masked node raises :class:`AmplitudeFloorBreach`.
    """
    grid = grid or psi.grid
    g = grid
    R = psi.R
    lapR = g.laplacian(R)
    mask = R >= QuantumParams().floor * np.max(R)
    if strict and not np.all(mask):
        raise AmplitudeFloorBreach(f"{int(np.sum(~mask))} nodes below the amplitude floor")
    out = np.zeros_like(R)
    out[mask] = -lapR[mask] / (2.0 * R[mask])
    return out


def total_potential(psi: QuantumState, grid: Optional[SphereGrid] = None,
                    masses: MassProfile = MassProfile.equal(3), spec: PotentialSpec = PotentialSpec(),
                    params: QuantumParams = QuantumParams()) -> np.ndarray:
    grid = grid or psi.grid
    C = SphereChart(masses).potential(grid.nodes, spec)
    if params.k_coupling == 0:
        return C
    return C + params.k_coupling * quantum_potential(psi, grid)


def dbb_rhs(state: QuantumCurveState, grid: Optional[SphereGrid] = None,
            masses: MassProfile = MassProfile.equal(3), spec: PotentialSpec = PotentialSpec(),
            params: QuantumParams = QuantumParams()):
    """``(dQ, du, dkappa, dR, dS)`` per unit arc length."""
    grid = grid or state.psi.grid
    m = _model(grid, masses, spec, params)
    return m.rhs_parts(np.asarray(state.Q.coords, float), np.asarray(state.dir.u, float), state.kappa,
                       state.psi.R, state.psi.S, state.eps_sign)


def tilde_K(state: QuantumCurveState, grid: Optional[SphereGrid] = None,
            masses: MassProfile = MassProfile.equal(3), spec: PotentialSpec = PotentialSpec(),
            params: QuantumParams = QuantumParams()) -> float:
    grid = grid or state.psi.grid
    m = _model(grid, masses, spec, params)
    f = m.fields(state.psi.R, state.psi.S)
    vt, _, _ = m.at_point(f, np.asarray(state.Q.coords, float))
    return m.tilde_K(state.kappa, vt, state.eps_sign)


def guidance_residual(state: QuantumCurveState, grid: Optional[SphereGrid] = None,
                      masses: MassProfile = MassProfile.equal(3), spec: PotentialSpec = PotentialSpec(),
                      params: QuantumParams = QuantumParams()) -> float:
    """``|sqrt(kappa) u - grad S(Q)|`` in the kinematic metric."""
    grid = grid or state.psi.grid
    m = _model(grid, masses, spec, params)
    f = m.fields(state.psi.R, state.psi.S)
    return m.guidance_residual(np.asarray(state.Q.coords, float), np.asarray(state.dir.u, float), state.kappa, f)


def seed_from_phase(Q, psi: QuantumState, scale: float = 1.0, alpha: float = 1.0,
                    eps_sign: int = 1) -> QuantumCurveState:
    """Direction and ``kappa`` from the phase gradient at ``Q``.

    ``u = grad S / |grad S|`` and ``kappa = |grad S|^2 / L^alpha``, both in the
    kinematic metric, so the guidance residual vanishes at the seed.
    """
    grid = psi.grid
    Q = np.asarray(Q, dtype=float)
    Q = Q / np.linalg.norm(Q)
    GS = 4.0 * grid.point(Q).gradient(grid.analyze(psi.S))
    norm_g = 0.5 * float(np.linalg.norm(GS))
    if not norm_g > 0:
        raise DegenerateInput("the phase gradient vanishes at Q; no direction to seed")
    u = GS / norm_g
    kappa = norm_g**2 / scale**alpha
    return QuantumCurveState(ShapePoint(Q, "sphere"), Direction(u), kappa, psi, eps_sign)


def field_controls(rtol: float = 1e-9, atol: float = 1e-11) -> StepControls:
    """Step controls for the field equations.

    Steps sit at the explicit stability limit of the fastest resolved
    dispersive mode, so the controller is damped more strongly than for the
    curve alone and the last stage is reused (the projection touches only the
    curve components).
    """
    return StepControls(rtol=rtol, atol=atol, pi_beta=0.08, reuse_last_stage=True)


def integrate_quantum_curve(initial: QuantumCurveState, span: float,
                            masses: MassProfile = MassProfile.equal(3), spec: PotentialSpec = PotentialSpec(),
                            params: QuantumParams = QuantumParams(),
                            controls: Optional[StepControls] = None) -> QuantumCurve:
    """Method-of-lines integration of the coupled curve and field equations.

    The norm of ``R`` is monitored and reported in every sample but never
    re-imposed.  Fields are stored only for the final state.
    """
    controls = controls or field_controls()
    grid = initial.psi.grid
    m = _model(grid, masses, spec, params)
    sign = initial.eps_sign
    # fields start inside the resolved band and the truncated flow keeps them there
    zR, zS = m.to_vector(grid.analyze(np.stack([initial.psi.R, initial.psi.S]), lmax=m.band))
    y0 = m.pack(np.asarray(initial.Q.coords, float), np.asarray(initial.dir.u, float), initial.kappa, zR, zS)

    def diagnostics(y, f):
        Q, u, kappa, zR, _ = m.unpack(y)
        vt, _, GS = m.at_point(f, Q)
        excess = 1.0 + 2.0 * vt / kappa
        eps = sign * math.sqrt(max(-excess, 0.0))
        resid = 0.5 * float(np.linalg.norm(math.sqrt(kappa) * u - GS))
        norm = grid.radius**2 * float(zR @ zR)  # Parseval on the radius-r sphere
        return Q.copy(), u.copy(), float(kappa), float(vt), norm, resid, eps

    last = {}

    def record(y):
        last["y"] = y.copy()
        f = m.state_fields(y)
        tail = m.coefficient_tail(np.stack([f.cR, f.cS]))
        if tail > params.resolution_tol:
            raise ResolutionExceeded(
                f"field structure reached the top of the resolved band (tail share {tail:.2e} > "
                f"{params.resolution_tol:g}); refine the grid"
            )
        return diagnostics(y, f)

    ss, rows, _ = dopri5(lambda s, y: m.rhs(y, sign), y0, 0.0, span, controls, project=m.project,
                         blocks=m.blocks(), record=record, error_norm=m.error_norm)
    samples = [QuantumSample(float(s), *row) for s, row in zip(ss, rows)]
    Q, u, kappa, zR, zS = m.unpack(last["y"])
    R, S = grid.synthesize(m.from_vector(np.stack([zR, zS])))
    final = QuantumCurveState(ShapePoint(Q.copy(), "sphere"), Direction(u.copy()), float(kappa),
                              QuantumState(R.copy(), S.copy(), grid), sign)
    return QuantumCurve(samples, final=final, model=m)
