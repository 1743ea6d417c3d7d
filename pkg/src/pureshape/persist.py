"""Versioned on-disk formats: curve and ephemeris CSV, JSON-lines, reports and manifests.

Every file names its format.  CSV files start with a ``# format: ...`` line,
JSON documents carry a ``"format"`` key.  Floats are written with 17
significant digits so that a file read back reproduces the in-memory numbers
exactly, and nothing time-dependent is recorded, so identical runs produce
byte-identical files.
"""
from __future__ import annotations

import csv
import hashlib
import json
import platform
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

__all__ = [
    "CURVE_FORMAT",
    "QUANTUM_CURVE_FORMAT",
    "EPHEMERIS_FORMAT",
    "MANIFEST_FORMAT",
    "curve_rows",
    "quantum_curve_rows",
    "write_csv",
    "read_csv",
    "write_jsonl",
    "write_json",
    "read_json",
    "ephemeris_rows",
    "write_manifest",
    "file_digest",
]

CURVE_FORMAT = "pureshape-curve/1"
QUANTUM_CURVE_FORMAT = "pureshape-quantum-curve/1"
EPHEMERIS_FORMAT = "pureshape-ephemeris/1"
MANIFEST_FORMAT = "pureshape-manifest/1"
REPORT_FORMAT = "pureshape-report/1"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    return format(x, ".17g")


def curve_rows(curve) -> tuple[list[str], list[list]]:
    """Columns ``s, q1.., phi, kappa, epsilon, C, residual`` of a classical or geodesic curve."""
    chart = curve.model.chart
    pts = curve.points.reshape(len(curve), -1)
    names = ["s"] + [f"q{i + 1}" for i in range(pts.shape[1])] + ["phi", "kappa", "epsilon", "C", "residual"]
    rows = []
    for smp, q in zip(curve, pts):
        phi = smp.state.dir.angle(chart, smp.state.q.coords) if chart.kind == "sphere" else float("nan")
        rows.append([smp.s, *q, phi, smp.state.kappa, smp.eps, smp.C, smp.residual])
    return names, rows


def quantum_curve_rows(curve) -> tuple[list[str], list[list]]:
    """Classical columns plus ``norm`` and ``guidance_residual``; ``C`` is the total potential."""
    chart = curve.model.chart
    names = ["s", "q1", "q2", "q3", "phi", "kappa", "epsilon", "C", "residual", "norm", "guidance_residual"]
    rows = []
    for smp in curve:
        resid = 1.0 + smp.eps**2 + 2.0 * smp.V_T / smp.kappa
        rows.append([smp.s, *smp.Q, chart.direction_angle(smp.Q, smp.u), smp.kappa, smp.eps, smp.V_T,
                     resid, smp.norm, smp.guidance_residual])
    return names, rows


def ephemeris_rows(eph) -> tuple[list[str], list[list]]:
    names = ["s", "logL", "logp", "t", "rate"]
    return names, [list(r) for r in zip(eph.s, eph.logL, eph.logp, eph.t, eph.rate)]


def write_csv(path, fmt: str, names: list[str], rows: Iterable[list]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# format: {fmt}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path) -> tuple[str, dict[str, np.ndarray]]:
    """Return ``(format, columns)``."""
    with Path(path).open() as fh:
        first = fh.readline().strip()
        if not first.startswith("# format:"):
            raise ValueError(f"{path}: missing format line")
        fmt = first.split(":", 1)[1].strip()
        reader = csv.reader(fh)
        names = next(reader)
        data = np.array([[float(x) for x in row] for row in reader], dtype=float)
    data = data.reshape(-1, len(names))
    return fmt, {n: data[:, i] for i, n in enumerate(names)}


def write_jsonl(path, fmt: str, names: list[str], rows: Iterable[list]) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(json.dumps({"format": fmt, "columns": names}) + "\n")
        for row in rows:
            fh.write(json.dumps(dict(zip(names, (float(x) for x in row)))) + "\n")
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    return obj


def write_json(path, kind: str, payload: dict) -> Path:
    path = Path(path)
    doc = {"format": REPORT_FORMAT, "kind": kind, **_plain(payload)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, command: str, config, artifacts: list[Path], extra: Optional[dict] = None) -> Path:
    """Record the resolved configuration, its hash, library versions and artifact digests."""
    import matplotlib
    import scipy

    from . import __version__

    out_dir = Path(out_dir)
    doc = {
        "format": MANIFEST_FORMAT,
        "command": command,
        "config": config.to_json() if config is not None else None,
        "config_hash": config.digest if config is not None else None,
        "versions": {
            "pureshape": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
        },
        "artifacts": {p.name: file_digest(p) for p in sorted(artifacts, key=lambda p: p.name)},
    }
    if extra:
        doc.update(_plain(extra))
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
