"""Spherical-harmonic transforms on a Gauss-Legendre x uniform-longitude grid.

The grid lives on the shape sphere with its polar axis along ``n1``:

    n = (cos theta, sin theta cos phi, sin theta sin phi)

which keeps the equilateral shapes (``n3 = +-1``) on the grid equator.  Fields
are real; coefficients are stored for ``m >= 0`` only, as a dense
``(lmax + 1) x (lmax + 1)`` complex array indexed ``[m, l]`` (zero for ``l < m``).
Every operator also accepts a smaller square array ``(b + 1) x (b + 1)``: the
coefficients of a field band-limited to degree ``b``.
Harmonics are orthonormal on the unit sphere and include the Condon-Shortley
phase, so they agree with :func:`scipy.special.sph_harm_y`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import sph_legendre_p_all

from .errors import ResolutionExceeded

__all__ = ["SphereGrid", "legendre_table", "PointBasis"]


def legendre_table(x, lmax: int):
    """Normalized associated Legendre functions at ``x = cos theta``.

    Returns ``(P, Q)`` of shape ``(lmax + 1, lmax + 1, len(x))`` indexed
    ``[m, l, j]``: ``P`` holds the functions themselves and ``Q = P / sin theta``
    for ``m >= 1`` (regular at the poles; ``Q[0]`` is zero).  The recurrence
    runs over ``l`` with every order ``m`` advanced at once.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    sin = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    n = lmax + 1
    m = np.arange(n, dtype=float)
    P = np.zeros((n, n, x.size))
    Q = np.zeros_like(P)
    # diagonal: P_mm = prod_k (-sqrt((2k+1)/(2k))) sin^m / sqrt(4 pi)
    factor = np.ones(n)
    factor[1:] = -np.sqrt((2.0 * m[1:] + 1.0) / (2.0 * m[1:]))
    coef = np.cumprod(factor) / np.sqrt(4.0 * np.pi)
    powers = sin[None, :] ** m[:, None]
    P[np.arange(n), np.arange(n)] = coef[:, None] * powers
    if n > 1:
        Q[np.arange(1, n), np.arange(1, n)] = coef[1:, None] * sin[None, :] ** (m[1:, None] - 1.0)
    both = np.stack([P, Q])  # [table, m, l, j]
    for l in range(1, n):
        # first off-diagonal for m = l - 1
        both[:, l - 1, l] = np.sqrt(2.0 * l + 1.0) * x * both[:, l - 1, l - 1]
        if l >= 2:
            mm = m[: l - 1]
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - mm * mm))
            b = np.sqrt(((l - 1.0) ** 2 - mm * mm) / (4.0 * (l - 1.0) ** 2 - 1.0))
            both[:, : l - 1, l] = a[None, :, None] * (
                x * both[:, : l - 1, l - 1] - b[None, :, None] * both[:, : l - 1, l - 2]
            )
    P, Q = both[0], both[1]
    Q[0] = 0.0
    return P, Q


def _theta_derivative(P, Q, x):
    """``dP_lm / dtheta`` from the table, regular everywhere."""
    n = P.shape[0]
    dP = np.zeros_like(P)
    l = np.arange(n, dtype=float)
    # m = 0: dP_l0/dtheta = sqrt(l (l + 1)) P_l1  (Condon-Shortley phase)
    if n > 1:
        dP[0, 1:] = np.sqrt(l[1:] * (l[1:] + 1.0))[:, None] * P[1, 1:]
    # m >= 1: (1 - x^2) dP/dx = -l x P_l + c P_{l-1};  dP/dtheta = -(1 - x^2) dP/dx / sin
    mm, ll = np.meshgrid(l, l, indexing="ij")
    valid = (ll > mm) & (mm >= 1)
    c = np.zeros_like(mm)
    c[valid] = np.sqrt((2.0 * ll[valid] + 1.0) * (ll[valid] - mm[valid]) * (ll[valid] + mm[valid])
                       / (2.0 * ll[valid] - 1.0))
    prev = np.zeros_like(Q)
    prev[:, 1:] = Q[:, :-1]
    lower = (mm >= 1) & (ll >= mm)
    out = ll[..., None] * x * Q - c[..., None] * prev
    dP[1:] = np.where(lower[..., None], out, 0.0)[1:]
    return dP


@dataclass
class PointBasis:
    """Harmonic values and derivatives at one point, ready to contract with coefficients."""

    theta: float
    phi: float
    P: np.ndarray      # [m, l]
    Q: np.ndarray      # [m, l], P / sin theta
    dP: np.ndarray     # [m, l], dP / dtheta
    phase: np.ndarray  # e^{i m phi}, [m]
    weight: np.ndarray  # 1 for m = 0, 2 otherwise (real-field folding)

    def _contract(self, coef, table, factor=1.0) -> float:
        n = coef.shape[-1]
        return float(np.real(np.sum((factor * self.weight * self.phase)[:n] * np.sum(coef * table[:n, :n], axis=1))))

    def value(self, coef) -> float:
        return self._contract(coef, self.P)

    def gradient(self, coef) -> np.ndarray:
        """Unit-sphere gradient of the field as an embedded 3-vector."""
        d_theta = self._contract(coef, self.dP)
        # (1 / sin theta) d/dphi
        d_phi = self._contract(coef, self.Q, 1j * np.arange(len(self.phase)))
        ct, st = np.cos(self.theta), np.sin(self.theta)
        cp, sp = np.cos(self.phi), np.sin(self.phi)
        e_theta = np.array([-st, ct * cp, ct * sp])
        e_phi = np.array([0.0, -sp, cp])
        return d_theta * e_theta + d_phi * e_phi


@dataclass
class SphereGrid:
    """Quadrature grid and spectral operators on the shape sphere of radius 1/2."""

    n_theta: int
    n_phi: int
    radius: float = 0.5
    lmax: int = field(init=False)

    def __post_init__(self):
        if self.n_theta < 2 or self.n_phi < 4:
            raise ValueError("grid too small")
        # exact transforms need 2 lmax + 1 < n_phi (no Nyquist mode) and lmax < n_theta
        self.lmax = min(self.n_theta - 1, (self.n_phi - 1) // 2)
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        # theta increases from the +n1 pole
        self.x = x[::-1].copy()
        self.gl_weights = w[::-1].copy()
        self.theta = np.arccos(self.x)
        self.phi = 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi
        self.P, self.Q = legendre_table(self.x, self.lmax)
        self.dP = _theta_derivative(self.P, self.Q, self.x)
        # transform tables with the FFT normalization and quadrature weights folded in;
        # synthesis tables are [m, j, l], the analysis table is [m, l, j]
        self._synth = {
            name: np.ascontiguousarray(self.n_phi * t.transpose(0, 2, 1))
            for name, t in (("P", self.P), ("dP", self.dP), ("Q", self.Q))
        }
        self._analysis = np.ascontiguousarray(self.P * (2.0 * np.pi / self.n_phi) * self.gl_weights)
        self._tables: dict = {}
        self._sin = np.sqrt(1.0 - self.x**2)
        self._m = np.arange(self.lmax + 1)
        self._l = np.arange(self.lmax + 1)

    # -- geometry ----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_theta, self.n_phi)

    @property
    def weights(self) -> np.ndarray:
        """Area weights on the radius-``r`` sphere; they sum to ``4 pi r^2``."""
        return np.outer(self.gl_weights, np.full(self.n_phi, 2.0 * np.pi / self.n_phi)) * self.radius**2

    @property
    def nodes(self) -> np.ndarray:
        """Unit shape-sphere points of the nodes, shape ``(n_theta, n_phi, 3)``."""
        st = self._sin[:, None]
        return np.stack(
            [np.broadcast_to(self.x[:, None], self.shape), st * np.cos(self.phi), st * np.sin(self.phi)],
            axis=-1,
        )

    def integrate(self, f) -> float:
        return float(np.sum(self.weights * f))

    @staticmethod
    def angles(n) -> tuple[float, float]:
        n = np.asarray(n, dtype=float)
        n = n / np.linalg.norm(n)
        return float(np.arccos(np.clip(n[0], -1, 1))), float(np.arctan2(n[2], n[1]) % (2 * np.pi))

    # -- transforms ------------------------------------------------------------
    @staticmethod
    def _as_pairs(a):
        """Complex ``[m, x, k]`` as real ``[m, x, 2k]`` (interleaved real and imaginary parts)."""
        return np.ascontiguousarray(a, dtype=complex).view(float)

    def _table(self, name: str, n: int) -> np.ndarray:
        """Transform table truncated to degree ``n - 1`` (cached, contiguous)."""
        key = (name, n)
        if key not in self._tables:
            full = self._analysis[:n, :n] if name == "analysis" else self._synth[name][:n, :, :n]
            self._tables[key] = np.ascontiguousarray(full)
        return self._tables[key]

    def _size(self, coef) -> int:
        n = coef.shape[-1]
        if coef.shape[-2] != n or n > self.lmax + 1:
            raise ValueError(f"coefficient array {coef.shape[-2:]} does not fit degree {self.lmax}")
        return n

    def _latitude_amplitudes(self, coef, table: str):
        """``sum_l coef[k, m, l] T[m, j, l]`` for a stack ``k`` of coefficients, as ``[k, j, m]``."""
        pairs = self._as_pairs(np.asarray(coef).transpose(1, 2, 0))  # (M, L, 2K)
        return np.matmul(self._table(table, self._size(coef)), pairs).view(complex).transpose(2, 1, 0)

    def _fold(self, F) -> np.ndarray:
        # F: [k, j, m] Fourier amplitudes per latitude -> grid values [k, j, phi]
        spec = np.zeros(F.shape[:-1] + (self.n_phi // 2 + 1,), dtype=complex)
        spec[..., : F.shape[-1]] = F
        return np.fft.irfft(spec, n=self.n_phi, axis=-1)

    @staticmethod
    def _stack(a):
        a = np.asarray(a)
        return a.reshape((-1,) + a.shape[-2:]), a.shape[:-2]

    def analyze(self, f, lmax: Optional[int] = None) -> np.ndarray:
        """Grid values to coefficients ``[..., m, l]`` (exact for degree <= lmax).

        Leading axes are a stack of independent fields.  A smaller ``lmax``
        returns only the coefficients up to that degree.
        """
        n = self.lmax + 1 if lmax is None else lmax + 1
        self.check_band(n - 1)
        f, lead = self._stack(np.asarray(f, dtype=float))
        F = np.fft.rfft(f, axis=-1)[..., :n]  # (K, J, M)
        out = np.matmul(self._table("analysis", n), self._as_pairs(F.transpose(2, 1, 0))).view(complex)  # (M, L, K)
        return out.transpose(2, 0, 1).reshape(lead + out.shape[:2])

    def synthesize(self, coef) -> np.ndarray:
        c, lead = self._stack(coef)
        return self._fold(self._latitude_amplitudes(c, "P")).reshape(lead + self.shape)

    def check_band(self, lmax: int):
        if lmax > self.lmax:
            raise ResolutionExceeded(f"band limit {lmax} exceeds grid Nyquist {self.lmax}")

    def eigenvalues(self) -> np.ndarray:
        """Laplace-Beltrami eigenvalue of each degree on the radius-``r`` sphere."""
        return -self._l * (self._l + 1.0) / self.radius**2

    def laplacian_coef(self, coef) -> np.ndarray:
        return coef * self.eigenvalues()[: self._size(coef)]

    def laplacian(self, f) -> np.ndarray:
        return self.synthesize(self.laplacian_coef(self.analyze(f)))

    def gradient_components(self, coef) -> tuple[np.ndarray, np.ndarray]:
        """``(d/dtheta, (1/sin theta) d/dphi)`` on the unit sphere at the nodes."""
        c, lead = self._stack(coef)
        k = c.shape[0]
        m = self._m[: self._size(c), None]
        F = np.concatenate([self._latitude_amplitudes(c, "dP"), self._latitude_amplitudes(1j * m * c, "Q")])
        both = self._fold(F)
        return both[:k].reshape(lead + self.shape), both[k:].reshape(lead + self.shape)

    def metric_dot(self, coef_a, coef_b) -> np.ndarray:
        """``g^ab A_,a B_,b`` at the nodes on the radius-``r`` sphere."""
        at, ap = self.gradient_components(coef_a)
        bt, bp = self.gradient_components(coef_b)
        return (at * bt + ap * bp) / self.radius**2

    def band_limited(self, coef, lmax: int) -> np.ndarray:
        out = coef.copy()
        out[..., lmax + 1 :] = 0.0
        return out

    def point(self, n, lmax: Optional[int] = None) -> PointBasis:
        """Harmonic tables at the unit vector ``n``, up to degree ``lmax`` (default: the grid's)."""
        lmax = self.lmax if lmax is None else lmax
        self.check_band(lmax)
        theta, phi = self.angles(n)
        sin = np.sin(theta)
        if sin > 1e-6:
            # compiled table of P and dP/dtheta, indexed [l, m] with m >= 0 first
            table = sph_legendre_p_all(lmax, lmax, theta, diff_n=1)
            P = np.ascontiguousarray(table[0][:, : lmax + 1].T)
            dP = np.ascontiguousarray(table[1][:, : lmax + 1].T)
            Q = P / sin
            Q[0] = 0.0
        else:
            # next to a pole P / sin theta needs the regular recurrence
            P, Q = legendre_table([np.cos(theta)], lmax)
            dP = _theta_derivative(P, Q, np.array([np.cos(theta)]))[..., 0]
            P, Q = P[..., 0], Q[..., 0]
        m = self._m[: lmax + 1]
        weight = np.where(m == 0, 1.0, 2.0)
        return PointBasis(theta, phi, P, Q, dP, np.exp(1j * m * phi), weight)

    def interpolate(self, coef, n) -> float:
        return self.point(n).value(coef)
