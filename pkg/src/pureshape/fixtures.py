"""Committed regression fixtures and the recipes that produce them.

A fixture is Newtonian initial data plus the shape-curve window it should be
integrated over.  The JSON files under ``pureshape/data`` are generated by
:func:`build_all` and committed so that every run starts from byte-identical
numbers; the recipes stay here so the data can be audited and regenerated.

Classical seeds follow one recipe: positions and velocities are drawn from a
standard normal generator, the velocities are adjusted to zero momentum, zero
angular momentum, zero dilatational momentum and zero energy (so the draw sits
exactly at its Janus point), and the Newtonian oracle is run backwards for half
the window to find the starting state.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .geometry import Configuration, MassProfile, PotentialSpec
from .oracle import OracleControls, newtonian_oracle, zero_energy_velocities

__all__ = [
    "Fixture",
    "CLASSICAL_SEEDS",
    "REGRESSION_SEED",
    "load_fixture",
    "fixture_names",
    "janus_draw",
    "classical_fixture",
    "kepler_pair_fixture",
    "homothetic_fixture",
    "build_all",
]

FORMAT = "pureshape-fixture/1"
CLASSICAL_SEEDS = (0, 5, 10)
REGRESSION_SEED = 42


@dataclass
class Fixture:
    name: str
    positions: np.ndarray
    velocities: np.ndarray
    masses: MassProfile
    spec: PotentialSpec
    # arc length of the shape-curve window; None for fixtures meant for the oracle only
    span: Optional[float]
    duration: Optional[float] = None
    seed: Optional[int] = None
    description: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def config(self) -> Configuration:
        return Configuration(self.positions, self.masses)

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "name": self.name,
            "description": self.description,
            "seed": self.seed,
            "masses": list(self.masses.ratios),
            "potential": {"beta": self.spec.beta, "degree": self.spec.degree, "softening": self.spec.softening},
            "positions": self.positions.tolist(),
            "velocities": self.velocities.tolist(),
            "span": self.span,
            "duration": self.duration,
            "extra": self.extra,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Fixture":
        if data.get("format") != FORMAT:
            raise ValueError(f"unsupported fixture format {data.get('format')!r}")
        pot = data["potential"]
        return cls(
            name=data["name"],
            positions=np.array(data["positions"], dtype=float),
            velocities=np.array(data["velocities"], dtype=float),
            masses=MassProfile(tuple(data["masses"])),
            spec=PotentialSpec(pot["beta"], pot["degree"], pot["softening"]),
            span=data["span"],
            duration=data.get("duration"),
            seed=data.get("seed"),
            description=data.get("description", ""),
            extra=data.get("extra", {}),
        )


def _data_dir():
    return resources.files("pureshape") / "data"


def fixture_names() -> list[str]:
    return sorted(p.name[:-5] for p in _data_dir().iterdir() if p.name.endswith(".json"))


def load_fixture(name: str) -> Fixture:
    """Load a committed fixture by name (``seed0``, ``kepler_pair``, ...) or from a path."""
    path = Path(name)
    if path.suffix == ".json" and path.exists():
        text = path.read_text()
    else:
        text = (_data_dir() / f"{name}.json").read_text()
    return Fixture.from_json(json.loads(text))


# -- recipes -------------------------------------------------------------------
def janus_draw(rng: np.random.Generator, masses: MassProfile = MassProfile.equal(3),
               spec: PotentialSpec = PotentialSpec(), dim: int = 2):
    """Standard-normal positions and velocities adjusted to E = 0, J = 0, D = 0.

    Returns ``(positions, velocities)`` sitting exactly at a Janus point.
    """
    n = len(masses)
    r = rng.normal(size=(n, dim))
    v = rng.normal(size=(n, dim))
    v, r = zero_energy_velocities(Configuration(r, masses), v, spec, dilation=0.0)
    return r, v


def classical_fixture(seed: int, half_span: float = 5.0, softening: float = 0.0,
                      name: Optional[str] = None) -> Fixture:
    masses = MassProfile.equal(3)
    spec = PotentialSpec(softening=softening)
    r, v = janus_draw(np.random.default_rng(seed), masses, spec)
    back = newtonian_oracle(Configuration(r, masses), v, spec, arclength=-half_span)
    r0, v0, _ = back.state_at_time(back.t[-1])
    return Fixture(
        name=name or f"seed{seed}",
        positions=r0,
        velocities=v0,
        masses=masses,
        spec=spec,
        span=2.0 * half_span,
        seed=seed,
        description=(
            f"planar equal-mass three-body, E=0, J=0; Janus point at arc length {half_span:g} "
            f"into a {2 * half_span:g}-unit window"
        ),
        extra={"janus_at": half_span},
    )


def kepler_pair_fixture(separation: float = 0.02, distance: float = 1.0, span: float = 0.5) -> Fixture:
    """A tight circular binary (bodies 0, 1) and a third body leaving on an E = 0 orbit.

    The outer relative velocity is mostly radial; a small transverse part
    cancels the binary's angular momentum so that the total is zero.
    """
    masses = MassProfile.equal(3)
    spec = PotentialSpec()
    m1, m2, m3 = masses.mu
    mb = m1 + m2
    # binary in its own centre-of-mass frame, circular orbit
    omega = np.sqrt(mb / separation**3)
    rb = np.array([[-m2 / mb * separation, 0.0], [m1 / mb * separation, 0.0]])
    vb = omega * np.stack([-rb[:, 1], rb[:, 0]], axis=1)
    j_bin = float(np.sum(np.array([m1, m2]) * (rb[:, 0] * vb[:, 1] - rb[:, 1] * vb[:, 0])))
    # outer relative coordinate along +y, reduced mass of (binary, third body)
    mu_out = mb * m3 / (mb + m3)
    e_bin = 0.5 * m1 * m2 / mb * (omega * separation) ** 2 - m1 * m2 / separation
    # interaction of the third body with the binary at the chosen distance
    R = np.array([0.0, distance])
    v_int = -sum(m * m3 / np.linalg.norm(R - x) for m, x in zip((m1, m2), rb))
    # J_out = mu_out (R_x V_y - R_y V_x) = -mu_out * distance * V_x must cancel j_bin
    v_x = j_bin / (mu_out * distance)
    kinetic = -(e_bin + v_int)
    v_r = np.sqrt(2.0 * kinetic / mu_out - v_x**2)
    V = np.array([v_x, v_r])
    pos = np.vstack([rb - m3 / (mb + m3) * R, (mb / (mb + m3)) * R])
    vel = np.vstack([vb - m3 / (mb + m3) * V, (mb / (mb + m3)) * V])
    # absorb the approximate interaction energy: rescale to exact E = 0, J = 0
    vel, pos = zero_energy_velocities(Configuration(pos, masses), vel, spec)
    return Fixture(
        name="kepler_pair",
        positions=pos,
        velocities=vel,
        masses=masses,
        spec=spec,
        span=span,
        description=(
            f"circular binary (bodies 0 and 1, separation {separation:g}) and a third body "
            f"at distance {distance:g} escaping on an E=0, J=0 orbit"
        ),
        extra={"binary": [0, 1]},
    )


def homothetic_fixture(duration: float = 5.0) -> Fixture:
    """Equal-mass equilateral triangle expanding homothetically with E = 0.

    The shape never changes, so this fixture is integrated with the Newtonian
    oracle only; its shape curve is a single point.
    """
    masses = MassProfile.equal(3)
    spec = PotentialSpec()
    ang = 2.0 * np.pi * np.arange(3) / 3.0 + np.pi / 2.0
    pos = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    config = Configuration(pos, masses)
    # radial velocities v = H r with kinetic energy equal to -V
    L2 = float(np.sum(masses.mu[:, None] * pos * pos))
    H = np.sqrt(-2.0 * config.potential(spec) / L2)
    return Fixture(
        name="homothetic",
        positions=pos,
        velocities=H * pos,
        masses=masses,
        spec=spec,
        span=None,
        duration=duration,
        description="equal-mass equilateral triangle on the parabolic homothetic (Lagrange) orbit",
    )


def build_all(out_dir=None) -> list[Path]:
    """Regenerate every committed fixture file."""
    out = Path(out_dir) if out_dir is not None else Path(str(_data_dir()))
    out.mkdir(parents=True, exist_ok=True)
    fixtures = [classical_fixture(s) for s in CLASSICAL_SEEDS]
    fixtures.append(classical_fixture(REGRESSION_SEED, half_span=2.5, softening=0.05))
    fixtures.append(kepler_pair_fixture())
    fixtures.append(homothetic_fixture())
    paths = []
    for fx in fixtures:
        path = out / f"{fx.name}.json"
        path.write_text(json.dumps(fx.to_json(), indent=1) + "\n")
        paths.append(path)
    return paths
