"""Command-line front end.

Every subcommand writes into one output directory and finishes with a
``manifest.json``.  Exit status is 0 on success, 2 for invalid input
(configuration, incompatible runs) and 3 for numerical failures, in which case
``error.json`` describes what went wrong.

Environment:

``PSD_OUTPUT_DIR``
    output directory when ``--out`` is not given (overrides ``output.dir``)
``PSD_THREADS``
    worker processes for ``ensemble`` (default 1)
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import persist, plots
from .analysis import (
    ArrowReport,
    BornSpec,
    SubsystemParams,
    arrow_of_time,
    born_test,
    complexity,
    detect_subsystems,
    hausdorff,
)
from .classical import (
    ClassicalModel,
    ClassicalCurveState,
    Curve,
    CurveSample,
    Direction,
    IntegrationControls,
    integrate_curve,
    state_from_cartesian,
    state_from_shape,
)
from .config import RunConfig, load_config, parse_config
from .ephemeris import ephemeris, reconstruct_newtonian
from .errors import ConfigError, IncompatibleCharts, Inconclusive, ShapeDynamicsError
from .fixtures import janus_draw, load_fixture
from .geometry import Configuration, MassProfile, PotentialSpec, ShapePoint, SphereChart
from .oracle import newtonian_oracle

__all__ = ["main", "run", "direction_from_angle"]

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


# -- helpers ------------------------------------------------------------------------
def direction_from_angle(chart: SphereChart, n, phi: float) -> np.ndarray:
    """Unit tangent (kinematic norm 1) at ``n`` with chart direction angle ``phi``."""
    n = np.asarray(n, dtype=float)
    e_t = chart.coordinate_basis(n)[0]
    e_t = e_t / np.linalg.norm(e_t)
    e_v = np.cross(n, e_t)
    return chart.unit_speed * (math.cos(phi) * e_t + math.sin(phi) * e_v)


def _out_dir(args, cfg: Optional[RunConfig] = None, default: str = "run") -> Path:
    if getattr(args, "out", None):
        path = Path(args.out)
    elif os.environ.get("PSD_OUTPUT_DIR"):
        path = Path(os.environ["PSD_OUTPUT_DIR"])
    elif cfg is not None and cfg.get("output.dir"):
        path = Path(cfg["output.dir"])
    else:
        path = Path("runs") / (cfg.get("name") if cfg is not None else default)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _overrides(pairs: Sequence[str]) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(item, "overrides must look like key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _config(args, extra: Optional[dict] = None) -> RunConfig:
    over = _overrides(getattr(args, "set", None))
    over.update(extra or {})
    if getattr(args, "config", None):
        return load_config(args.config, over)
    return parse_config("", over)


def _controls(cfg: RunConfig) -> IntegrationControls:
    return IntegrationControls(rtol=cfg["integrate.rtol"], atol=cfg["integrate.atol"],
                               tol_constraint=cfg["integrate.tol_constraint"])


def _classical_setup(cfg: RunConfig):
    """Masses, potential, initial state, span and (when known) Cartesian data."""
    masses, spec = cfg.masses, cfg.spec
    span = cfg.get("integrate.span")
    cart = None
    if cfg.get("initial.fixture"):
        fx = load_fixture(cfg["initial.fixture"])
        if len(fx.masses) != len(masses) or not np.allclose(fx.masses.mu, masses.mu):
            raise ConfigError("masses.ratios", f"differs from fixture {fx.name!r} {list(fx.masses.ratios)}")
        spec = fx.spec
        cart = (fx.positions, fx.velocities)
        if span is None:
            if fx.span is None:
                raise ConfigError("integrate.span", f"fixture {fx.name!r} has no shape-curve window")
            span = fx.span
    elif cfg.get("initial.positions") is not None:
        cart = (np.array(cfg["initial.positions"]), np.array(cfg["initial.velocities"]))
    if cart is not None:
        try:
            state = state_from_cartesian(cart[0], cart[1], masses, spec)
        except ValueError as exc:
            raise ConfigError("initial", str(exc)) from exc
    else:
        if len(masses) != 3:
            raise ConfigError("initial.shape", "shape-chart initial data needs the three-body sphere")
        chart = SphereChart(masses)
        n = np.asarray(cfg["initial.shape"], dtype=float)
        n = n / np.linalg.norm(n)
        u = direction_from_angle(chart, n, cfg["initial.direction"])
        state = state_from_shape(ShapePoint(n, "sphere"), u, cfg["initial.kappa"], masses, spec,
                                 cfg["initial.eps_sign"], cfg["integrate.tol_constraint"])
    return masses, spec, state, float(span), cart


def _write_curve(out: Path, cfg: RunConfig, names, rows, fmt) -> list[Path]:
    arts = [persist.write_csv(out / "curve.csv", fmt, names, rows)]
    if cfg.get("output.jsonl"):
        arts.append(persist.write_jsonl(out / "curve.jsonl", fmt, names, rows))
    return arts


def _arrow_json(curve) -> dict:
    try:
        return arrow_of_time(complexity(curve)).to_json()
    except Inconclusive as exc:
        return {"inconclusive": str(exc)}


# -- pipelines ----------------------------------------------------------------------
def run_classical(cfg: RunConfig, out: Path, oracle: bool = False) -> list[Path]:
    masses, spec, state, span, cart = _classical_setup(cfg)
    kind = "geodesic" if cfg.kind == "geodesic" else "nbody"
    if oracle:
        if cart is None:
            raise ConfigError("initial", "the Newtonian oracle needs Cartesian initial data")
        curve = oracle_curve(cart[0], cart[1], masses, spec, span)
    else:
        curve = integrate_curve(state, span, masses, spec, _controls(cfg), model=kind)
    names, rows = persist.curve_rows(curve)
    arts = _write_curve(out, cfg, names, rows, persist.CURVE_FORMAT)
    report = {"samples": len(curve), "span": span, "model": "oracle" if oracle else kind}
    if kind == "nbody":
        report["max_constraint_residual"] = float(np.max(np.abs(curve.residual)))
        report["janus_events"] = [float(e) for e in curve.events]
        eph = None
        if cfg["analysis.ephemeris"]:
            eph = ephemeris(curve, tol=cfg["integrate.tol_constraint"])
            names_e, rows_e = persist.ephemeris_rows(eph)
            arts.append(persist.write_csv(out / "ephemeris.csv", persist.EPHEMERIS_FORMAT, names_e, rows_e))
            report["ephemeris_error_estimate"] = eph.error_estimate
        if cfg["analysis.arrow"]:
            report["arrow"] = _arrow_json(curve)
        if cfg["analysis.subsystems"]:
            if eph is None:
                eph = ephemeris(curve, tol=cfg["integrate.tol_constraint"])
            traj = reconstruct_newtonian(curve, eph, masses)
            params = SubsystemParams(cfg["analysis.theta_c"], cfg["analysis.theta_L"], cfg["analysis.dominance"])
            report["subsystems"] = detect_subsystems(traj, masses, spec, params).to_json()
    arts.append(persist.write_json(out / "analysis.json", "simulation", report))
    if cfg["output.plots"]:
        arts.extend(_plots(curve, out))
    return arts


def _plots(curve, out: Path) -> list[Path]:
    arts = []
    chart = curve.model.chart
    if chart.kind == "sphere":
        arts.append(plots.sphere_svg(curve.points, out / "trajectory.svg", chart.collision_points()))
    if curve.kind != "geodesic":
        trace = complexity(curve)
        try:
            janus = arrow_of_time(trace).janus_s
        except Inconclusive:
            janus = None
        arts.append(plots.complexity_svg(trace.s, trace.values, out / "complexity.svg", janus))
    return arts


def oracle_curve(positions, velocities, masses: MassProfile, spec: PotentialSpec, span: float) -> Curve:
    """The Newtonian oracle run projected to shape space, in the curve sample format."""
    traj = newtonian_oracle(Configuration(np.asarray(positions), masses), np.asarray(velocities), spec,
                            arclength=span)
    samples = []
    model = None
    for s, r, v in zip(traj.arclength, traj.positions, traj.velocities):
        st = state_from_cartesian(r, v, masses, spec)
        if model is None:
            from .geometry import chart_for

            model = ClassicalModel(chart_for(masses, r.shape[1]), spec)
        c, _ = model.metric_gradient(np.asarray(st.q.coords))
        res = 1.0 + st.eps**2 + 2.0 * c / st.kappa
        samples.append(CurveSample(float(s), st, float(st.eps), float(c), float(res)))
    return Curve(samples, model=model, kind="oracle")


def _quantum_initial(cfg: RunConfig, grid=None):
    from .quantum import QuantumModel, QuantumParams, QuantumState, seed_from_phase
    from .sht import SphereGrid

    nt, nph = cfg["quantum.grid"]
    try:
        grid = grid or SphereGrid(nt, nph)
    except ValueError as exc:
        raise ConfigError("quantum.grid", str(exc)) from exc
    k = cfg["quantum.k_coupling"]
    try:
        # hbar = sqrt(k); a classical run (k = 0) keeps the unit-hbar phase as its Hamilton-Jacobi function
        psi = QuantumState.rotating_dipole(grid, cfg["quantum.dipole"], math.sqrt(k) if k > 0 else 1.0)
        params = QuantumParams(k_coupling=k, alpha=cfg.spec.degree + 2,
                               branch_term=cfg["quantum.branch_term"],
                               band_fraction=cfg["quantum.band_fraction"],
                               tol_constraint=cfg["integrate.tol_constraint"])
    except ValueError as exc:
        raise ConfigError("quantum", str(exc)) from exc
    psi = QuantumModel(grid, cfg.masses, cfg.spec, params).resolve(psi)
    state = seed_from_phase(cfg["quantum.seed_point"], psi, alpha=params.alpha, eps_sign=cfg["quantum.eps_sign"])
    return state, params


def run_quantum(cfg: RunConfig, out: Path) -> list[Path]:
    from .quantum import field_controls, integrate_quantum_curve

    if cfg.get("integrate.span") is None:
        raise ConfigError("integrate.span", "required for quantum runs")
    state, params = _quantum_initial(cfg)
    controls = field_controls(cfg["quantum.rtol"], cfg["quantum.atol"])
    curve = integrate_quantum_curve(state, cfg["integrate.span"], cfg.masses, cfg.spec, params, controls)
    names, rows = persist.quantum_curve_rows(curve)
    arts = _write_curve(out, cfg, names, rows, persist.QUANTUM_CURVE_FORMAT)
    arts.append(write_field(out / "field.txt", curve.final.psi))
    report = {
        "samples": len(curve),
        "span": cfg["integrate.span"],
        "max_norm_drift": float(np.max(np.abs(curve.norm - curve.norm[0]))),
        "final_guidance_residual": float(curve.guidance[-1]),
        "band": int(curve.model.band),
    }
    arts.append(persist.write_json(out / "analysis.json", "quantum", report))
    if cfg["output.plots"]:
        arts.append(plots.sphere_svg(curve.points, out / "trajectory.svg", curve.model.chart.collision_points()))
    return arts


def write_field(path, psi) -> Path:
    """Text dump of ``R`` and ``S`` on the grid with a JSON header line."""
    g = psi.grid
    header = {"format": "pureshape-field/1", "n_theta": g.n_theta, "n_phi": g.n_phi, "radius": g.radius,
              "normalization": psi.norm}
    path = Path(path)
    with path.open("w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for name, arr in (("R", psi.R), ("S", psi.S)):
            fh.write(f"# {name}\n")
            for row in arr:
                fh.write(" ".join(format(float(x), ".17g") for x in row) + "\n")
    return path


# -- curve files back into memory ---------------------------------------------------------
def load_run(run_dir) -> tuple[dict, str, dict]:
    run_dir = Path(run_dir)
    manifest = persist.read_json(run_dir / "manifest.json")
    fmt, cols = persist.read_csv(run_dir / "curve.csv")
    return manifest, fmt, cols


def curve_from_columns(cols: dict, cfg: RunConfig) -> Curve:
    """Rebuild a sphere-chart curve (states and model) from its CSV columns."""
    if "q4" in cols or "q3" not in cols:
        raise IncompatibleCharts("only sphere-chart curves can be reloaded")
    masses, spec = cfg.masses, cfg.spec
    if cfg.get("initial.fixture"):
        spec = load_fixture(cfg["initial.fixture"]).spec
    chart = SphereChart(masses)
    model = ClassicalModel(chart, spec)
    samples = []
    for i in range(len(cols["s"])):
        n = np.array([cols["q1"][i], cols["q2"][i], cols["q3"][i]])
        u = direction_from_angle(chart, n, cols["phi"][i])
        eps = cols["epsilon"][i]
        st = ClassicalCurveState(ShapePoint(n, "sphere"), Direction(u), cols["kappa"][i], 1 if eps >= 0 else -1, eps)
        samples.append(CurveSample(cols["s"][i], st, eps, cols["C"][i], cols["residual"][i]))
    return Curve(samples, model=model)


# -- subcommands --------------------------------------------------------------------------
def cmd_simulate(args, kind: str) -> tuple[Path, list[Path], RunConfig]:
    extra = {}
    if kind == "quantum":
        if args.grid:
            extra["quantum.grid"] = args.grid
        if args.span is not None:
            extra["integrate.span"] = str(args.span)
    cfg = _config(args, extra)
    if cfg.kind != kind:
        raise ConfigError("model.kind", f"is {cfg.kind!r} but the subcommand runs {kind!r}")
    out = _out_dir(args, cfg)
    if kind == "quantum":
        return out, run_quantum(cfg, out), cfg
    return out, run_classical(cfg, out, oracle=getattr(args, "oracle", False)), cfg


def cmd_ephemeris(args):
    manifest, fmt, cols = load_run(args.run)
    if fmt != persist.CURVE_FORMAT:
        raise IncompatibleCharts(f"ephemeris needs a classical curve, got {fmt}")
    cfg = parse_config("", {k: _raw(v) for k, v in manifest["config"].items() if v is not None})
    curve = curve_from_columns(cols, cfg)
    eph = ephemeris(curve, anchor=args.anchor, anchor_pair=(args.anchor_a, args.anchor_b),
                    tol=cfg["integrate.tol_constraint"])
    out = _out_dir(args, None, default=Path(args.run).name + "-ephemeris")
    names, rows = persist.ephemeris_rows(eph)
    arts = [persist.write_csv(out / "ephemeris.csv", persist.EPHEMERIS_FORMAT, names, rows),
            persist.write_json(out / "ephemeris_errors.json", "ephemeris", {"error_estimate": eph.error_estimate})]
    return out, arts, cfg


def _raw(v) -> str:
    if isinstance(v, list):
        if v and isinstance(v[0], list):
            return "; ".join(", ".join(repr(float(x)) for x in row) for row in v)
        if len(v) == 2 and all(isinstance(x, int) for x in v):
            return f"{v[0]}x{v[1]}"
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


def cmd_analyze(args):
    manifest, fmt, cols = load_run(args.run)
    cfg = parse_config("", {k: _raw(v) for k, v in manifest["config"].items() if v is not None})
    report = {"source": str(args.run)}
    if fmt == persist.CURVE_FORMAT:
        curve = curve_from_columns(cols, cfg)
        report["arrow"] = _arrow_json(curve)
        if args.subsystems:
            eph = ephemeris(curve, tol=cfg["integrate.tol_constraint"])
            traj = reconstruct_newtonian(curve, eph, cfg.masses)
            params = SubsystemParams(args.theta_c, args.theta_L, args.dominance)
            report["subsystems"] = detect_subsystems(traj, cfg.masses, curve.model.spec, params).to_json()
    else:
        from .analysis import ComplexityTrace

        try:
            report["arrow"] = arrow_of_time(ComplexityTrace(cols["s"], -cols["C"])).to_json()
        except Inconclusive as exc:
            report["arrow"] = {"inconclusive": str(exc)}
    out = _out_dir(args, None, default=Path(args.run).name + "-analysis")
    return out, [persist.write_json(out / "analysis.json", "analysis", report)], cfg


def cmd_born(args):
    spec = BornSpec(k_coupling=args.k, duration=args.duration, bins=args.bins, branch_term=args.branch_term)
    rep = born_test(spec, members=args.members, seed=args.seed)
    out = _out_dir(args, None, default="born")
    payload = rep.to_json()
    payload["passed"] = {
        "initial_draw": rep.tv_initial < args.tv_tol,
        "equivariance": rep.tv_final < args.tv_tol,
        "negative_control": rep.tv_control > args.control_tol,
    }
    payload["spec"] = {k: getattr(spec, k) for k in spec.__dataclass_fields__}
    return out, [persist.write_json(out / "born.json", "born", payload)], None


def cmd_compare(args):
    ma, fa, ca = load_run(args.a)
    mb, fb, cb = load_run(args.b)
    qa = [k for k in ca if k.startswith("q")]
    qb = [k for k in cb if k.startswith("q")]
    if qa != qb:
        raise IncompatibleCharts(f"chart coordinates differ: {qa} vs {qb}")
    masses_a = ma["config"]["masses.ratios"]
    masses_b = mb["config"]["masses.ratios"]
    if not np.allclose(MassProfile.from_masses(masses_a).mu, MassProfile.from_masses(masses_b).mu):
        raise IncompatibleCharts("runs use different mass profiles")
    A = np.stack([ca[k] for k in qa], axis=1)
    B = np.stack([cb[k] for k in qb], axis=1)
    report = {"a": str(args.a), "b": str(args.b), "samples": [len(A), len(B)]}
    sphere = len(qa) == 3
    tb = ta = None
    if sphere and "phi" in cb:
        chart = SphereChart(MassProfile.from_masses(masses_a))
        tb = np.array([direction_from_angle(chart, q, p) for q, p in zip(B, cb["phi"])])
        ta = np.array([direction_from_angle(chart, q, p) for q, p in zip(A, ca["phi"])])
    d_ab = hausdorff(A, B, tb, cb["s"] if tb is not None else None, on_sphere=sphere)
    d_ba = hausdorff(B, A, ta, ca["s"] if ta is not None else None, on_sphere=sphere)
    report["hausdorff_a_to_b"] = d_ab
    report["hausdorff_b_to_a"] = d_ba
    passed = d_ab < args.tol
    ea, eb = Path(args.a) / "ephemeris.csv", Path(args.b) / "ephemeris.csv"
    if ea.exists() and eb.exists():
        _, xa = persist.read_csv(ea)
        _, xb = persist.read_csv(eb)
        s = xa["s"][(xa["s"] >= xb["s"][0]) & (xa["s"] <= xb["s"][-1])]
        Lrel = np.abs(np.exp(np.interp(s, xa["s"], xa["logL"]) - np.interp(s, xb["s"], xb["logL"])) - 1.0)
        trel = np.abs(np.interp(s, xa["s"], xa["t"]) - np.interp(s, xb["s"], xb["t"]))
        report["scale_relative_error"] = float(Lrel.max()) if len(s) else None
        report["time_relative_error"] = float(trel.max()) if len(s) else None
        if len(s):
            passed = passed and Lrel.max() < args.ephemeris_tol and trel.max() < args.ephemeris_tol
    report["tolerances"] = {"hausdorff": args.tol, "ephemeris": args.ephemeris_tol}
    report["passed"] = bool(passed)
    out = _out_dir(args, None, default="compare")
    return out, [persist.write_json(out / "compare.json", "compare", report)], None


def _ensemble_member(job):
    """One member: a random Janus-point draw integrated half the span each way."""
    cfg_values, entropy, index, out = job
    cfg = RunConfig(cfg_values)
    rng = np.random.default_rng(np.random.SeedSequence(entropy).spawn(index + 1)[index])
    masses, spec = cfg.masses, cfg.spec
    r, v = janus_draw(rng, masses, spec)
    state = state_from_cartesian(r, v, masses, spec)
    half = 0.5 * cfg["integrate.span"]
    controls = _controls(cfg)
    member_dir = Path(out) / f"member_{index:03d}"
    member_dir.mkdir(parents=True, exist_ok=True)
    try:
        fwd = integrate_curve(state, half, masses, spec, controls)
        bwd = integrate_curve(state, -half, masses, spec, controls)
    except ShapeDynamicsError as exc:
        return {"member": index, "error": type(exc).__name__, "message": str(exc)}
    curve = Curve(list(reversed(bwd))[:-1] + list(fwd), model=fwd.model)
    names, rows = persist.curve_rows(curve)
    persist.write_csv(member_dir / "curve.csv", persist.CURVE_FORMAT, names, rows)
    return {
        "member": index,
        "samples": len(curve),
        "max_constraint_residual": float(np.max(np.abs(curve.residual))),
        "arrow": _arrow_json(curve),
    }


def cmd_ensemble(args):
    cfg = _config(args)
    if cfg.kind != "classical":
        raise ConfigError("model.kind", "ensembles run the classical model")
    if cfg.get("integrate.span") is None:
        raise ConfigError("integrate.span", "required for ensembles")
    out = _out_dir(args, cfg)
    workers = args.workers or int(os.environ.get("PSD_THREADS", "1"))
    jobs = [(cfg.values, cfg["seed"], i, str(out)) for i in range(args.members)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_ensemble_member, jobs))
    else:
        results = [_ensemble_member(j) for j in jobs]
    # ordered fold over members
    arrows = [r["arrow"].get("arrow") for r in results if "arrow" in r]
    summary = {
        "members": results,
        "counts": {k: arrows.count(k) for k in ("both", "forward", "backward", "none")},
        "failures": sum(1 for r in results if "error" in r),
    }
    arts = [persist.write_json(out / "ensemble.json", "ensemble", summary)]
    arts += sorted(out.glob("member_*/curve.csv"))
    return out, arts, cfg


# -- entry point ----------------------------------------------------------------------------
def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pureshape", description="Relational N-body dynamics on shape space.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="run configuration file")
            sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a configuration key")
        sp.add_argument("--out", help="output directory")

    for name in ("simulate-geodesic", "simulate-classical", "simulate-quantum"):
        sp = sub.add_parser(name, help=f"integrate a {name.split('-')[1]} shape curve")
        common(sp)
        if name == "simulate-classical":
            sp.add_argument("--oracle", action="store_true", help="run the Newtonian oracle instead")
        if name == "simulate-quantum":
            sp.add_argument("--grid", help="n_theta x n_phi, e.g. 32x64")
            sp.add_argument("--span", type=float, help="arc length to integrate")
    sp = sub.add_parser("ephemeris", help="scale and time from a stored classical curve")
    common(sp, config=False)
    sp.add_argument("--run", required=True, help="directory of a simulate-classical run")
    sp.add_argument("--anchor", type=int, default=0)
    sp.add_argument("--anchor-a", type=int, default=0)
    sp.add_argument("--anchor-b", type=int, default=-1)
    sp = sub.add_parser("analyze", help="arrow of time and subsystems of a stored run")
    common(sp, config=False)
    sp.add_argument("--run", required=True)
    sp.add_argument("--subsystems", action="store_true")
    sp.add_argument("--theta-c", dest="theta_c", type=float, default=0.2)
    sp.add_argument("--theta-L", dest="theta_L", type=float, default=0.05)
    sp.add_argument("--dominance", type=float, default=10.0)
    sp = sub.add_parser("born-test", help="equivariance of |psi|^2 on a circle chart")
    common(sp, config=False)
    sp.add_argument("--members", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--bins", type=int, default=64)
    sp.add_argument("--k", type=float, default=1.0)
    sp.add_argument("--duration", type=float, default=1.0)
    sp.add_argument("--branch-term", action="store_true", help="request K~ (rejected)")
    sp.add_argument("--tv-tol", type=float, default=0.03)
    sp.add_argument("--control-tol", type=float, default=0.2)
    sp = sub.add_parser("compare", help="parametrization-free distance between two runs")
    common(sp, config=False)
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--tol", type=float, default=1e-5)
    sp.add_argument("--ephemeris-tol", type=float, default=1e-4)
    sp = sub.add_parser("ensemble", help="independent random Janus-point runs")
    common(sp)
    sp.add_argument("--members", type=int, default=8)
    sp.add_argument("--workers", type=int, default=0)
    return p


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    handlers = {
        "simulate-geodesic": lambda a: cmd_simulate(a, "geodesic"),
        "simulate-classical": lambda a: cmd_simulate(a, "classical"),
        "simulate-quantum": lambda a: cmd_simulate(a, "quantum"),
        "ephemeris": cmd_ephemeris,
        "analyze": cmd_analyze,
        "born-test": cmd_born,
        "compare": cmd_compare,
        "ensemble": cmd_ensemble,
    }
    out = None
    try:
        out, arts, cfg = handlers[args.command](args)
        persist.write_manifest(out, args.command, cfg, arts)
        print(json.dumps({"status": "ok", "out": str(out)}))
        return EXIT_OK
    except (ConfigError, IncompatibleCharts) as exc:
        diag = {"status": "invalid", "error": type(exc).__name__, "path": getattr(exc, "path", None),
                "message": str(exc)}
        print(json.dumps(diag), file=sys.stderr)
        return EXIT_INPUT
    except ShapeDynamicsError as exc:
        diag = {"status": "numerical-failure", "error": type(exc).__name__, "message": str(exc)}
        target = out or _fallback_dir(args)
        if target is not None:
            persist.write_json(Path(target) / "error.json", "error", diag)
        print(json.dumps(diag), file=sys.stderr)
        return EXIT_NUMERIC


def _fallback_dir(args) -> Optional[Path]:
    try:
        cfg = _config(args) if getattr(args, "config", None) or getattr(args, "set", None) else None
        return _out_dir(args, cfg, default=args.command)
    except ShapeDynamicsError:
        return None


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
