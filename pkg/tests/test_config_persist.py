from pathlib import Path

import numpy as np
import pytest

from pureshape import persist
from pureshape.config import SCHEMA, load_config, parse_config, schema_markdown
from pureshape.errors import ConfigError

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

MINIMAL = """
format = pureshape-config/1
model.kind = classical
masses.ratios = 1, 2, 3
initial.shape = 0.6, 0.0, 0.8
integrate.span = 1.5
"""


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.kind == "classical"
    assert np.allclose(cfg.masses.mu, [0.5, 1.0, 1.5])
    assert cfg["integrate.rtol"] == SCHEMA["integrate.rtol"].default
    assert cfg["quantum.grid"] == (32, 64)


def test_overrides_are_parsed_like_file_values():
    cfg = parse_config(MINIMAL, {"quantum.grid": "16x32", "output.plots": "no"})
    assert cfg["quantum.grid"] == (16, 32) and cfg["output.plots"] is False


@pytest.mark.parametrize(
    "text, key",
    [
        (MINIMAL.replace("masses.ratios = 1, 2, 3\n", ""), "masses.ratios"),
        (MINIMAL + "bogus.key = 1\n", "bogus.key"),
        (MINIMAL + "integrate.rtol = tiny\n", "integrate.rtol"),
        (MINIMAL.replace("1, 2, 3", "1, -2, 3"), "masses.ratios"),
        (MINIMAL.replace("pureshape-config/1", "other/9"), "format"),
        (MINIMAL + "initial.eps_sign = 0\n", "initial.eps_sign"),
        (MINIMAL.replace("integrate.span = 1.5\n", ""), "integrate.span"),
    ],
    ids=["missing-masses", "unknown-key", "unparsable", "negative-mass", "format", "eps-sign", "no-span"],
)
def test_invalid_configs_name_the_field(text, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.path == key


def test_quantum_needs_softening():
    text = MINIMAL.replace("classical", "quantum").replace("1, 2, 3", "1, 1, 1")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.path == "potential.softening"


def test_digest_tracks_resolved_values():
    a, b = parse_config(MINIMAL), parse_config(MINIMAL + "# a comment\n")
    assert a.digest == b.digest
    assert parse_config(MINIMAL, {"seed": "7"}).digest != a.digest


def test_committed_fixture_configs_load():
    for path in sorted(FIXTURES.glob("*.cfg")):
        cfg = load_config(path)
        assert cfg["name"] == path.stem


def test_schema_markdown_lists_every_key():
    table = schema_markdown()
    for key in SCHEMA:
        assert f"`{key}`" in table


def test_csv_round_trip_is_exact(tmp_path, rng):
    rows = rng.normal(size=(20, 3)) * 10.0 ** rng.integers(-12, 12, size=(20, 3))
    path = persist.write_csv(tmp_path / "c.csv", "fmt/1", ["a", "b", "c"], rows)
    fmt, cols = persist.read_csv(path)
    assert fmt == "fmt/1"
    assert np.array_equal(cols["b"], rows[:, 1])


def test_csv_without_format_line_is_rejected(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        persist.read_csv(p)


def test_manifest_records_hashes(tmp_path):
    cfg = parse_config(MINIMAL)
    art = persist.write_json(tmp_path / "r.json", "test", {"x": np.float64(1.5), "bad": float("inf")})
    man = persist.read_json(persist.write_manifest(tmp_path, "demo", cfg, [art]))
    assert man["config_hash"] == cfg.digest
    assert man["artifacts"]["r.json"] == persist.file_digest(art)
    assert persist.read_json(art)["bad"] == "inf"
