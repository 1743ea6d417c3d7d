import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from pureshape import persist
from pureshape.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, run

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def _cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text("format = pureshape-config/1\n" + text)
    return str(p)


@pytest.fixture(scope="module")
def kepler_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("kepler")
    assert run(["simulate-classical", "--config", str(FIXTURES / "kepler_pair.cfg"), "--out", str(out)]) == EXIT_OK
    return out


def test_classical_run_writes_hashed_artifacts(kepler_run):
    man = persist.read_json(kepler_run / "manifest.json")
    assert man["command"] == "simulate-classical"
    for name, digest in man["artifacts"].items():
        assert persist.file_digest(kepler_run / name) == digest
    fmt, cols = persist.read_csv(kepler_run / "curve.csv")
    assert fmt == persist.CURVE_FORMAT
    assert np.max(np.abs(cols["residual"])) < 1e-6
    report = persist.read_json(kepler_run / "analysis.json")
    assert report["subsystems"]["flagged"] == [[0, 1]]


def test_repeated_runs_are_byte_identical(tmp_path):
    args = ["simulate-classical", "--config", str(FIXTURES / "seed5.cfg"), "--set", "integrate.span=1.0",
            "--set", "output.plots=false"]
    assert run(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert run(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    for name in ("curve.csv", "ephemeris.csv", "analysis.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_missing_masses_is_an_input_error(tmp_path, capsys):
    cfg = _cfg(tmp_path, "model.kind = classical\ninitial.fixture = seed0\n")
    assert run(["simulate-classical", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_INPUT
    diag = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert diag["path"] == "masses.ratios"


def test_wrong_subcommand_for_kind(tmp_path):
    assert run(["simulate-geodesic", "--config", str(FIXTURES / "seed0.cfg"), "--out", str(tmp_path)]) == EXIT_INPUT


def test_unresolved_field_exits_with_error_report(tmp_path):
    out = tmp_path / "q"
    code = run(["simulate-quantum", "--config", str(FIXTURES / "quantum_decoupled.cfg"), "--grid", "8x16",
                "--span", "100", "--out", str(out)])
    assert code == EXIT_NUMERIC
    assert persist.read_json(out / "error.json")["error"] == "ResolutionExceeded"


def test_short_quantum_run(tmp_path):
    out = tmp_path / "q"
    code = run(["simulate-quantum", "--config", str(FIXTURES / "quantum_decoupled.cfg"), "--grid", "16x32",
                "--span", "0.1", "--out", str(out)])
    assert code == EXIT_OK
    fmt, cols = persist.read_csv(out / "curve.csv")
    assert fmt == persist.QUANTUM_CURVE_FORMAT
    assert cols["guidance_residual"][0] < 1e-12
    assert np.max(np.abs(cols["norm"] - 1)) < 1e-10
    assert (out / "field.txt").exists()


def test_ephemeris_and_analyze_from_a_stored_run(kepler_run, tmp_path):
    assert run(["ephemeris", "--run", str(kepler_run), "--out", str(tmp_path / "e")]) == EXIT_OK
    fmt, cols = persist.read_csv(tmp_path / "e" / "ephemeris.csv")
    assert fmt == persist.EPHEMERIS_FORMAT and cols["logL"][0] == 0.0
    assert run(["analyze", "--run", str(kepler_run), "--subsystems", "--out", str(tmp_path / "a")]) == EXIT_OK
    rep = persist.read_json(tmp_path / "a" / "analysis.json")
    assert rep["subsystems"]["flagged"] == [[0, 1]]


def test_compare_a_run_with_itself(kepler_run, tmp_path):
    assert run(["compare", str(kepler_run), str(kepler_run), "--out", str(tmp_path)]) == EXIT_OK
    rep = persist.read_json(tmp_path / "compare.json")
    assert rep["passed"] and rep["hausdorff_a_to_b"] == 0.0


def test_compare_rejects_other_mass_profiles(kepler_run, tmp_path):
    other = tmp_path / "g"
    cfg = _cfg(tmp_path, "model.kind = geodesic\nmasses.ratios = 1, 2, 3\ninitial.shape = 0.6, 0.0, 0.8\n"
                         "integrate.span = 0.5\noutput.plots = false\n")
    assert run(["simulate-geodesic", "--config", cfg, "--out", str(other)]) == EXIT_OK
    assert run(["compare", str(kepler_run), str(other), "--out", str(tmp_path / "c")]) == EXIT_INPUT


def test_born_cli(tmp_path):
    args = ["born-test", "--members", "2000", "--bins", "16", "--duration", "0.2", "--out", str(tmp_path)]
    assert run(args) == EXIT_OK
    assert all(persist.read_json(tmp_path / "born.json")["passed"].values())
    assert run(args + ["--branch-term"]) == EXIT_NUMERIC


def test_ensemble(tmp_path):
    cfg = _cfg(tmp_path, "model.kind = classical\nmasses.ratios = 1, 1, 1\ninitial.fixture = seed0\n"
                         "integrate.span = 0.6\nseed = 11\n")
    assert run(["ensemble", "--config", cfg, "--members", "2", "--out", str(tmp_path / "e")]) == EXIT_OK
    summary = persist.read_json(tmp_path / "e" / "ensemble.json")
    assert [m["member"] for m in summary["members"]] == [0, 1]
    assert summary["failures"] == 0
    assert all(m["max_constraint_residual"] < 1e-6 for m in summary["members"])


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "pureshape.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for name in ("simulate-geodesic", "simulate-classical", "simulate-quantum", "ephemeris", "analyze",
                 "born-test", "compare", "ensemble"):
        assert name in res.stdout
