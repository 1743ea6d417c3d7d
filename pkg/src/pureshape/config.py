"""Run configuration: flat ``key = value`` text with dotted sections.

Example::

    format = pureshape-config/1
    model.kind = classical
    masses.ratios = 1, 1, 1
    initial.fixture = kepler_pair
    integrate.span = 0.5

Lines starting with ``#`` or ``;`` are comments.  Every key is checked against
:data:`SCHEMA`; unknown keys, missing required keys and malformed values raise
:class:`~pureshape.errors.ConfigError` naming the offending key.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from .errors import ConfigError
from .geometry import MassProfile, PotentialSpec

__all__ = ["CONFIG_FORMAT", "SCHEMA", "RunConfig", "parse_config", "load_config", "schema_markdown"]

CONFIG_FORMAT = "pureshape-config/1"
MODEL_KINDS = ("geodesic", "classical", "quantum")


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _matrix(text: str) -> tuple:
    """Rows separated by ``;``, entries by ``,``."""
    rows = [tuple(float(x) for x in row.split(",")) for row in text.split(";") if row.strip()]
    if len({len(r) for r in rows}) != 1:
        raise ValueError("rows of unequal length")
    return tuple(rows)


def _grid(text: str) -> tuple:
    a, b = text.lower().split("x")
    return int(a), int(b)


def _kind(text: str) -> str:
    text = text.strip()
    if text not in MODEL_KINDS:
        raise ValueError(f"expected one of {', '.join(MODEL_KINDS)}")
    return text


@dataclass(frozen=True)
class Field:
    parse: Callable[[str], Any]
    default: Any = None
    required: bool = False
    doc: str = ""


SCHEMA: dict[str, Field] = {
    "format": Field(str, CONFIG_FORMAT, doc="file format tag"),
    "name": Field(str, "run", doc="run name, used for the default output directory"),
    "seed": Field(int, 0, doc="RNG seed for anything stochastic"),
    "model.kind": Field(_kind, required=True, doc="geodesic | classical | quantum"),
    "masses.ratios": Field(_floats, required=True, doc="comma-separated masses (normalized to mean 1)"),
    "potential.beta": Field(float, 1.0, doc="coupling of the homogeneous potential"),
    "potential.degree": Field(float, -1.0, doc="homogeneity degree k (Newtonian: -1)"),
    "potential.softening": Field(float, 0.0, doc="scale-free softening length"),
    "initial.fixture": Field(str, doc="name of a committed fixture (or a path to one)"),
    "initial.positions": Field(_matrix, doc="Cartesian positions, rows separated by ';'"),
    "initial.velocities": Field(_matrix, doc="Cartesian velocities, rows separated by ';'"),
    "initial.shape": Field(_floats, doc="shape-sphere point n1, n2, n3"),
    "initial.direction": Field(float, 0.0, doc="direction angle phi at the shape point"),
    "initial.kappa": Field(float, 1.0, doc="intrinsic acceleration at the shape point"),
    "initial.eps_sign": Field(int, 1, doc="branch of eps (+1 expanding, -1 contracting)"),
    "integrate.span": Field(float, doc="arc length to integrate (defaults to the fixture's)"),
    "integrate.rtol": Field(float, 1e-12, doc="relative tolerance"),
    "integrate.atol": Field(float, 1e-14, doc="absolute tolerance"),
    "integrate.tol_constraint": Field(float, 1e-6, doc="abort above this constraint residual"),
    "quantum.grid": Field(_grid, (32, 64), doc="n_theta x n_phi"),
    "quantum.k_coupling": Field(float, 1.0, doc="quantum coupling k"),
    "quantum.branch_term": Field(_bool, True, doc="keep the K~ term (false: decoupled regime)"),
    "quantum.band_fraction": Field(float, 2.0 / 3.0, doc="resolved fraction of the harmonic band"),
    "quantum.dipole": Field(float, 0.5, doc="c in the initial wave 1 + c (n1 + i n2), 0 <= c < 1"),
    "quantum.seed_point": Field(_floats, (0.6, 0.3, 0.3), doc="actual shape Q at the start"),
    "quantum.eps_sign": Field(int, 1, doc="branch sign of the quantum constraint root"),
    "quantum.rtol": Field(float, 1e-9, doc="relative tolerance of the field integration"),
    "quantum.atol": Field(float, 1e-11, doc="absolute tolerance of the field integration"),
    "analysis.ephemeris": Field(_bool, True, doc="compute scale and time after a classical run"),
    "analysis.arrow": Field(_bool, True, doc="complexity trace and arrow of time"),
    "analysis.subsystems": Field(_bool, False, doc="cluster detection on the reconstructed embedding"),
    "analysis.theta_c": Field(float, 0.2, doc="clustering threshold in units of L"),
    "analysis.theta_L": Field(float, 0.05, doc="allowed relative drift of a cluster scale"),
    "analysis.dominance": Field(float, 10.0, doc="required dominance ratio"),
    "output.dir": Field(str, doc="output directory (overridden by PSD_OUTPUT_DIR)"),
    "output.jsonl": Field(_bool, False, doc="also write curve.jsonl"),
    "output.plots": Field(_bool, True, doc="write SVG plots"),
}


@dataclass
class RunConfig:
    values: dict
    source: Optional[str] = None

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    @property
    def kind(self) -> str:
        return self.values["model.kind"]

    @property
    def masses(self) -> MassProfile:
        return MassProfile.from_masses(self.values["masses.ratios"])

    @property
    def spec(self) -> PotentialSpec:
        return PotentialSpec(self["potential.beta"], self["potential.degree"], self["potential.softening"])

    def to_json(self) -> dict:
        def plain(v):
            if isinstance(v, tuple):
                return [plain(x) for x in v]
            return v

        return {k: plain(v) for k, v in sorted(self.values.items())}

    @property
    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of the resolved configuration."""
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def parse_config(text: str, overrides: Optional[dict] = None, source: Optional[str] = None) -> RunConfig:
    """Parse, apply ``overrides`` (raw strings) and validate."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string("[run]\n" + text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from exc
    raw = dict(cp["run"])
    raw.update(overrides or {})
    values = {}
    for key, text_value in raw.items():
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
        try:
            values[key] = SCHEMA[key].parse(text_value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(key, f"cannot parse {text_value!r}: {exc}") from exc
    for key, fld in SCHEMA.items():
        if key not in values:
            if fld.required:
                raise ConfigError(key, "required key is missing")
            values[key] = fld.default
    if values["format"] != CONFIG_FORMAT:
        raise ConfigError("format", f"expected {CONFIG_FORMAT!r}, got {values['format']!r}")
    cfg = RunConfig(values, source)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    v = cfg.values
    try:
        masses = cfg.masses
    except ValueError as exc:
        raise ConfigError("masses.ratios", str(exc)) from exc
    try:
        cfg.spec
    except ValueError as exc:
        raise ConfigError("potential", str(exc)) from exc
    has_fixture = v["initial.fixture"] is not None
    has_cart = v["initial.positions"] is not None
    has_shape = v["initial.shape"] is not None
    if cfg.kind != "quantum" and has_fixture + has_cart + has_shape != 1:
        raise ConfigError("initial", "give exactly one of initial.fixture, initial.positions or initial.shape")
    if has_cart:
        pos = np.array(v["initial.positions"])
        if v["initial.velocities"] is None:
            raise ConfigError("initial.velocities", "required with initial.positions")
        if np.array(v["initial.velocities"]).shape != pos.shape:
            raise ConfigError("initial.velocities", "shape differs from initial.positions")
        if pos.shape[0] != len(masses):
            raise ConfigError("initial.positions", f"{pos.shape[0]} rows for {len(masses)} masses")
    if has_shape and len(v["initial.shape"]) != 3:
        raise ConfigError("initial.shape", "expected three components")
    if v["integrate.span"] is None and not has_fixture:
        raise ConfigError("integrate.span", "required unless a fixture supplies it")
    for key in ("initial.eps_sign", "quantum.eps_sign"):
        if v[key] not in (-1, 1):
            raise ConfigError(key, "must be +1 or -1")
    if cfg.kind == "quantum":
        if len(masses) != 3:
            raise ConfigError("masses.ratios", "the quantum model needs exactly three bodies")
        if not v["potential.softening"] > 0:
            raise ConfigError("potential.softening", "the quantum model needs a positive softening")
        if not 0 <= v["quantum.dipole"] < 1:
            raise ConfigError("quantum.dipole", "must lie in [0, 1)")


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {p}: {exc.strerror}") from exc
    return parse_config(text, overrides, str(p))


def schema_markdown() -> str:
    """The schema as a Markdown table (used to generate the README section)."""
    lines = ["| key | default | description |", "|---|---|---|"]
    for key, fld in SCHEMA.items():
        default = "required" if fld.required else ("" if fld.default is None else str(fld.default))
        lines.append(f"| `{key}` | {default} | {fld.doc} |")
    return "\n".join(lines)
