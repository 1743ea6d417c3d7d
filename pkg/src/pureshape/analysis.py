"""Complexity, the arrow of time, subsystem formation and Born statistics."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import resample
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import Inconclusive, RegimeViolation
from .geometry import MassProfile, PotentialSpec, SphereChart, random_shapes

__all__ = [
    "ComplexityTrace",
    "ArrowReport",
    "SubsystemParams",
    "ClusterReport",
    "SubsystemReport",
    "BornSpec",
    "BornReport",
    "complexity",
    "arrow_of_time",
    "complexity_argmin",
    "detect_subsystems",
    "born_test",
    "tv_distance",
    "hausdorff",
]


# -- complexity and the arrow of time -------------------------------------------------
@dataclass
class ComplexityTrace:
    s: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.s.shape != self.values.shape:
            raise ValueError("s and values must have the same length")


def complexity(curve) -> ComplexityTrace:
    """``Com(s) = -C(q(s))``; any curve exposing ``s`` and ``potential`` works."""
    return ComplexityTrace(np.asarray(curve.s), -np.asarray(curve.potential))


@dataclass
class ArrowReport:
    janus_index: int
    janus_s: float
    minimum: float
    slope_before: float  # d Com / d(distance from the minimum), samples before it
    slope_after: float
    samples_before: int
    samples_after: int
    unique_minimum: bool

    @property
    def arrow(self) -> str:
        """Direction(s) in which complexity grows away from the minimum."""
        before, after = self.slope_before > 0, self.slope_after > 0
        if before and after:
            return "both"
        if after:
            return "forward"
        if before:
            return "backward"
        return "none"

    def to_json(self) -> dict:
        return {
            "janus_index": self.janus_index,
            "janus_s": self.janus_s,
            "minimum": self.minimum,
            "slope_before": self.slope_before,
            "slope_after": self.slope_after,
            "samples_before": self.samples_before,
            "samples_after": self.samples_after,
            "unique_minimum": self.unique_minimum,
            "arrow": self.arrow,
        }


def _outward_slope(s, v, s0, resample):
    # regress on an even grid in s so dense adaptive steps near encounters do not dominate
    grid = np.linspace(s.min(), s.max(), resample)
    vals = np.interp(grid, s, v)
    dist = np.abs(grid - s0)
    slope, _ = np.polyfit(dist, vals, 1)
    return float(slope)


def arrow_of_time(trace: ComplexityTrace, min_samples: int = 10, resample: int = 1001,
                  rel_tol: float = 1e-9) -> ArrowReport:
    """Locate the global complexity minimum and fit outward slopes on each side."""
    s, v = trace.s, trace.values
    order = np.argsort(s)
    s, v = s[order], v[order]
    if np.ptp(v) <= rel_tol * max(1.0, abs(v).max()):
        raise Inconclusive("complexity trace is constant")
    k = int(np.argmin(v))
    before, after = k, len(s) - k - 1
    if before < min_samples or after < min_samples:
        raise Inconclusive(f"only {before} samples before and {after} after the minimum")
    near = np.flatnonzero(v <= v[k] + rel_tol * abs(v[k]))
    # ties only count if they are far from the minimum (a flat bottom is still one minimum)
    span = s[-1] - s[0]
    unique = bool(np.all(np.abs(s[near] - s[k]) <= 1e-3 * span))
    return ArrowReport(
        janus_index=int(order[k]),
        janus_s=float(s[k]),
        minimum=float(v[k]),
        slope_before=_outward_slope(s[: k + 1], v[: k + 1], s[k], resample),
        slope_after=_outward_slope(s[k:], v[k:], s[k], resample),
        samples_before=before,
        samples_after=after,
        unique_minimum=unique,
    )


def complexity_argmin(masses: MassProfile = MassProfile.equal(3), spec: PotentialSpec = PotentialSpec(),
                      n: int = 100_000, seed: int = 0) -> np.ndarray:
    """Shape-sphere point of least complexity among ``n`` uniform random shapes."""
    chart = SphereChart(masses)
    pts = random_shapes(np.random.default_rng(seed), n)
    return pts[int(np.argmin(-chart.potential(pts, spec)))]


# -- subsystems -----------------------------------------------------------------------
@dataclass(frozen=True)
class SubsystemParams:
    theta_c: float = 0.2
    theta_L: float = 0.05
    dominance: float = 10.0


@dataclass
class ClusterReport:
    members: tuple
    intra_ratio: float  # condition 1: intra-cluster over external classical potential (window minimum)
    quantum_ratio: float  # condition 2: classical over quantum contribution (window minimum)
    scale_drift: float  # condition 3: (max - min) / mean of the cluster scale L_I
    conditions: tuple
    scale: np.ndarray = field(repr=False)

    @property
    def flagged(self) -> bool:
        return all(self.conditions)

    def to_json(self) -> dict:
        return {
            "members": list(self.members),
            "condition_ratios": {
                "intra_over_external": self.intra_ratio,
                "classical_over_quantum": self.quantum_ratio if np.isfinite(self.quantum_ratio) else "inf",
                "scale_drift": self.scale_drift,
            },
            "conditions": list(self.conditions),
            "flagged": self.flagged,
        }


@dataclass
class SubsystemReport:
    membership: np.ndarray  # cluster label per body
    clusters: list
    whole_system: bool
    params: SubsystemParams

    @property
    def flagged(self) -> list:
        return [c.members for c in self.clusters if c.flagged]

    def to_json(self) -> dict:
        return {
            "membership": self.membership.tolist(),
            "whole_system": self.whole_system,
            "thresholds": {"theta_c": self.params.theta_c, "theta_L": self.params.theta_L,
                           "dominance": self.params.dominance},
            "clusters": [c.to_json() for c in self.clusters],
            "flagged": [list(m) for m in self.flagged],
        }


def _pair_terms(r, mu, spec):
    """``mu_i mu_j / r_ij`` for every pair at every sample: shape ``(T, N, N)``."""
    diff = r[:, :, None, :] - r[:, None, :, :]
    d2 = np.sum(diff * diff, axis=-1)
    rc = r - np.einsum("i,tid->td", mu, r)[:, None, :] / mu.sum()
    L2 = np.einsum("i,tid,tid->t", mu, rc, rc)
    d2 = d2 + spec.softening**2 * L2[:, None, None]
    with np.errstate(divide="ignore"):
        w = np.outer(mu, mu)[None] / np.sqrt(d2)
    idx = np.arange(len(mu))
    w[:, idx, idx] = 0.0
    return w, np.sqrt(d2), np.sqrt(L2)


def detect_subsystems(trajectory, masses: Optional[MassProfile] = None, spec: PotentialSpec = PotentialSpec(),
                      params: SubsystemParams = SubsystemParams(), window: Optional[slice] = None,
                      quantum_potential: Optional[Sequence[float]] = None) -> SubsystemReport:
    """Find bound clusters in a Newtonian embedding and test the three regime conditions.

    ``trajectory`` is anything with ``positions`` of shape ``(T, N, d)`` (a
    reconstruction from the ephemeris or an oracle run).  Bodies are linked when
    their separation stays below ``theta_c * L`` at every sample of the window;
    clusters are the connected components (single linkage).  For each proper
    cluster with at least two bodies:

    1. intra-cluster potential over the potential coupling it to the rest,
    2. classical potential over the quantum contribution ``k V_q(Q)`` (infinite
       for a classical run),
    3. relative drift of the cluster scale ``L_I`` over the window.
    """
    masses = masses or trajectory.masses
    mu = masses.mu
    r = np.asarray(trajectory.positions, dtype=float)
    if window is not None:
        r = r[window]
    n = r.shape[1]
    w, dist, L = _pair_terms(r, mu, spec)
    linked = np.all(dist < params.theta_c * L[:, None, None], axis=0)
    np.fill_diagonal(linked, False)
    _, labels = connected_components(csr_matrix(linked), directed=False)
    groups = [tuple(int(i) for i in np.flatnonzero(labels == lab)) for lab in np.unique(labels)]
    whole = len(groups) == 1
    qpot = None
    if quantum_potential is not None:
        qpot = np.abs(np.asarray(quantum_potential, dtype=float))
        if window is not None:
            qpot = qpot[window]
    reports = []
    for members in groups:
        if len(members) < 2 or len(members) == n:
            continue
        inside = np.zeros(n, bool)
        inside[list(members)] = True
        intra = 0.5 * np.sum(w[:, inside][:, :, inside], axis=(1, 2))
        external = np.sum(w[:, inside][:, :, ~inside], axis=(1, 2))
        ratio1 = float(np.min(intra / np.where(external > 0, external, np.nan))) if np.any(external > 0) else np.inf
        # shape-space size of the intra-cluster potential: sum mu mu L / r
        intra_shape = intra * L
        ratio2 = np.inf if qpot is None else float(np.min(intra_shape / np.maximum(qpot, 1e-300)))
        mI = mu[inside]
        rI = r[:, inside]
        cI = np.einsum("i,tid->td", mI, rI) / mI.sum()
        LI = np.sqrt(np.einsum("i,tid->t", mI, (rI - cI[:, None, :]) ** 2))
        drift = float(np.ptp(LI) / np.mean(LI))
        conds = (ratio1 >= params.dominance, ratio2 >= params.dominance, drift <= params.theta_L)
        reports.append(ClusterReport(members, ratio1, ratio2, drift, conds, LI))
    return SubsystemReport(labels, reports, whole, params)


# -- curve distances -----------------------------------------------------------------
def _hermite(p0, p1, m0, m1, h, t):
    """Cubic Hermite value, first and second derivative in ``t`` (arrays broadcast over points)."""
    t = t[:, None]
    t2, t3 = t * t, t * t * t
    H = (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * h * m0 + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * h * m1
    dH = (6 * t2 - 6 * t) * p0 + (3 * t2 - 4 * t + 1) * h * m0 + (-6 * t2 + 6 * t) * p1 + (3 * t2 - 2 * t) * h * m1
    ddH = (12 * t - 6) * p0 + (6 * t - 4) * h * m0 + (-12 * t + 6) * p1 + (6 * t - 2) * h * m1
    return H, dH, ddH


def hausdorff(points_a, points_b, tangents_b=None, s_b=None, newton_steps: int = 8,
              on_sphere: bool = False) -> float:
    """One-sided Hausdorff distance ``max_a min_b |a - b|`` from samples ``a`` to curve ``b``.

    With tangents and arc lengths for ``b`` the curve between samples is the
    cubic Hermite interpolant and each nearest point is refined by Newton
    iterations on the two intervals around the closest sample; otherwise ``b``
    is the polyline through its samples.  ``on_sphere`` pulls interpolated
    points back onto the unit sphere, removing the radial part of the
    interpolation error.
    """
    A = np.asarray(points_a, dtype=float).reshape(len(points_a), -1)
    B = np.asarray(points_b, dtype=float).reshape(len(points_b), -1)
    if len(B) == 1:
        return float(np.max(np.linalg.norm(A - B[0], axis=1)))
    # a few nearest samples of b for every point of a (the curve may pass near itself)
    cand = min(4, len(B))
    nearest = np.empty((len(A), cand), dtype=int)
    for lo in range(0, len(A), 512):
        d2 = np.sum((A[lo : lo + 512, None, :] - B[None, :, :]) ** 2, axis=-1)
        nearest[lo : lo + 512] = np.argpartition(d2, cand - 1, axis=1)[:, :cand]
    best = np.min(np.linalg.norm(A[:, None, :] - B[nearest], axis=-1), axis=1)
    hermite = tangents_b is not None and s_b is not None
    if hermite:
        M = np.asarray(tangents_b, dtype=float).reshape(len(B), -1)
        S = np.asarray(s_b, dtype=float)
    for shift, j in ((sh, c) for sh in (-1, 0) for c in range(cand)):
        k = np.clip(nearest[:, j] + shift, 0, len(B) - 2)
        p0, p1 = B[k], B[k + 1]
        if hermite:
            m0, m1 = M[k], M[k + 1]
            h = (S[k + 1] - S[k])[:, None]
            t = np.full(len(A), 0.5)
            for _ in range(newton_steps):
                H, dH, ddH = _hermite(p0, p1, m0, m1, h, t)
                r = H - A
                g = np.sum(r * dH, axis=1)
                curv = np.sum(dH * dH, axis=1) + np.sum(r * ddH, axis=1)
                t = np.clip(t - g / np.where(curv > 0, curv, np.inf), 0.0, 1.0)
            H, _, _ = _hermite(p0, p1, m0, m1, h, t)
            if on_sphere:
                H = H / np.linalg.norm(H, axis=1, keepdims=True)
            d = np.linalg.norm(H - A, axis=1)
        else:
            seg = p1 - p0
            t = np.clip(np.sum((A - p0) * seg, axis=1) / np.maximum(np.sum(seg * seg, axis=1), 1e-300), 0, 1)
            d = np.linalg.norm(p0 + t[:, None] * seg - A, axis=1)
        best = np.minimum(best, d)
    return float(np.max(best))


# -- Born statistics --------------------------------------------------------------------
@dataclass(frozen=True)
class BornSpec:
    """Effective one-dimensional subsystem on a circle chart.

    ``psi_eff(x, 0) ~ exp(width * cos(x - center)) exp(i momentum x)`` evolves
    under ``-(k/2) d^2/dx^2 + amplitude * cos(x)`` with ``hbar = sqrt(k)``.
    """

    k_coupling: float = 1.0
    amplitude: float = 16.0
    center: float = np.pi
    width: float = 4.0
    momentum: int = 2
    duration: float = 1.0
    n_grid: int = 512
    dt: float = 1e-3
    bins: int = 64
    branch_term: bool = False


@dataclass
class BornReport:
    tv_initial: float
    tv_final: float
    tv_control: float
    members: int
    bins: int
    seed: int
    spec: BornSpec

    def to_json(self) -> dict:
        return {
            "tv_initial": self.tv_initial,
            "tv_final": self.tv_final,
            "tv_control": self.tv_control,
            "ensemble_size": self.members,
            "bins": self.bins,
            "seed": self.seed,
        }


def tv_distance(samples, density_bins) -> float:
    """Total-variation distance between a sample histogram and bin probabilities on ``[0, 2 pi)``."""
    bins = len(density_bins)
    counts, _ = np.histogram(np.mod(samples, 2 * np.pi), bins=bins, range=(0.0, 2 * np.pi))
    return 0.5 * float(np.sum(np.abs(counts / counts.sum() - density_bins)))


class _CircleSchrodinger:
    def __init__(self, spec: BornSpec):
        self.spec = spec
        n = spec.n_grid
        self.x = 2 * np.pi * np.arange(n) / n
        self.kx = np.fft.fftfreq(n, d=1.0 / n)
        self.hbar = np.sqrt(spec.k_coupling)
        self.V = spec.amplitude * np.cos(self.x)
        psi = np.exp(spec.width * np.cos(self.x - spec.center)) * np.exp(1j * spec.momentum * self.x)
        self.psi0 = psi / np.sqrt(np.sum(np.abs(psi) ** 2) * 2 * np.pi / n)

    def step(self, psi, dt):
        """Strang split step of ``i hbar psi_t = H psi``."""
        h = self.hbar
        half = np.exp(-0.5j * dt * self.V / h)
        kin = np.exp(-0.5j * dt * h * self.kx**2)
        return half * np.fft.ifft(kin * np.fft.fft(half * psi))

    def velocity(self, psi):
        """Guidance field ``hbar Im(psi'/psi)`` as a periodic cubic spline."""
        dpsi = np.fft.ifft(1j * self.kx * np.fft.fft(psi))
        v = self.hbar * np.imag(dpsi * np.conj(psi)) / np.maximum(np.abs(psi) ** 2, 1e-300)
        xs = np.append(self.x, 2 * np.pi)
        return CubicSpline(xs, np.append(v, v[0]), bc_type="periodic")

    def bin_probabilities(self, psi, bins, refine=64):
        # integrate |psi|^2 over each bin using spectrally interpolated values
        dens = np.abs(resample(psi, refine * len(psi))) ** 2
        dens = dens / dens.sum()
        return dens.reshape(bins, -1).sum(axis=1)

    def sample(self, psi, size, rng):
        n_fine = 64 * len(psi)
        dens = np.abs(resample(psi, n_fine)) ** 2
        cdf = np.concatenate([[0.0], np.cumsum(dens)])
        cdf /= cdf[-1]
        xs = 2 * np.pi * np.arange(n_fine + 1) / n_fine
        return np.interp(rng.random(size), cdf, xs)


def born_test(spec: BornSpec = BornSpec(), members: int = 10_000, seed: int = 0) -> BornReport:
    """Equivariance of ``|psi_eff|^2`` under the decoupled guidance dynamics.

    Draws ``members`` initial positions from ``|psi_eff(0)|^2``, moves them with
    the guidance velocity while ``psi_eff`` evolves, and compares the end
    histogram with ``|psi_eff(end)|^2``.  A uniform ensemble evolved the same
    way serves as the negative control.
    """
    if spec.branch_term:
        raise RegimeViolation("Born statistics hold only in the decoupled regime without the branch term")
    if spec.n_grid % spec.bins:
        raise ValueError("n_grid must be a multiple of bins")
    sys_ = _CircleSchrodinger(spec)
    rng = np.random.default_rng(seed)
    psi = sys_.psi0
    x = sys_.sample(psi, members, rng)
    control = rng.random(members) * 2 * np.pi
    tv0 = tv_distance(x, sys_.bin_probabilities(psi, spec.bins))
    steps = int(round(spec.duration / spec.dt))
    dt = spec.duration / steps
    pts = np.concatenate([x, control])
    for _ in range(steps):
        psi_half = sys_.step(psi, 0.5 * dt)
        psi_next = sys_.step(psi_half, 0.5 * dt)
        v0, vh, v1 = sys_.velocity(psi), sys_.velocity(psi_half), sys_.velocity(psi_next)
        wrap = lambda p: np.mod(p, 2 * np.pi)
        k1 = v0(wrap(pts))
        k2 = vh(wrap(pts + 0.5 * dt * k1))
        k3 = vh(wrap(pts + 0.5 * dt * k2))
        k4 = v1(wrap(pts + dt * k3))
        pts = pts + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        psi = psi_next
    probs = sys_.bin_probabilities(psi, spec.bins)
    return BornReport(
        tv_initial=tv0,
        tv_final=tv_distance(pts[:members], probs),
        tv_control=tv_distance(pts[members:], probs),
        members=members,
        bins=spec.bins,
        seed=seed,
        spec=spec,
    )
