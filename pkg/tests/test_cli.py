import json

import numpy as np
import pytest

from llab.cli import main
from llab.config import DEFAULTS, apply_overrides, config_hash, load_config
from llab.counting import LandscapeCounter, ids_curve, read_curves_csv, weyl_predictor
from llab.errors import ValidationError
from llab.fieldio import load_field, load_landscape, read_fld
from llab.grid import build_grid
from llab.landscape import solve_landscape
from llab.operator import DiscreteOperator, eigen_dense
from llab.potential import constant_potential

FLAT = ["--set", 'potential.source="preset"', "--set", 'potential.preset="constant"',
        "--set", "potential.c=1", "--set", "grid.R0=16", "--set", "mu_grid.max=20"]


def _run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([args[0], "--out", str(out), *args[1:]])
    return code, out


def test_curves_flat_matches_modules(tmp_path):
    code, out = _run(tmp_path, "a", "curves", *FLAT)
    assert code == 0
    echo = json.loads((out / "config_echo.json").read_text())
    cols, h = read_curves_csv(out / "curves.csv", expect_hash=echo["config_sha256"])
    assert list(cols) == ["mu", "N", "N_u", "N_V", "N_W"]
    g = build_grid(1, 16, 8)
    V = constant_potential(g, 1.0)
    op = DiscreteOperator(g, V)
    land = solve_landscape(op)
    mu = cols["mu"]
    assert np.array_equal(cols["N"], ids_curve(eigen_dense(op), mu, 16).values)
    counter = LandscapeCounter(land)
    assert np.array_equal(cols["N_u"], [counter(m) for m in mu])
    assert np.allclose(cols["N_V"], weyl_predictor(V, mu, g), rtol=1e-15)
    assert np.allclose(cols["N_W"], weyl_predictor(land.W, mu, g), rtol=1e-12)


@pytest.mark.parametrize("cmd", ["curves", "lawcheck", "spectrum", "doubling", "gen-potential"])
def test_byte_identical_reruns(tmp_path, cmd):
    args = [cmd, "--set", "grid.R0=16", "--seed", "3"]
    _, a = _run(tmp_path, "a", *args)
    _, b = _run(tmp_path, "b", *args)
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_hash_embedded_everywhere(tmp_path):
    code, out = _run(tmp_path, "a", "lawcheck", "--set", "grid.R0=16")
    assert code == 0
    h = json.loads((out / "config_echo.json").read_text())["config_sha256"]
    assert json.loads((out / "lawreport.json").read_text())["config_sha256"] == h
    read_curves_csv(out / "curves.csv", expect_hash=h)
    assert (out / "lawreport.txt").read_text().startswith(f"# config_sha256={h}")
    assert read_fld(out / "potential.fld")[4]["config_sha256"] == h
    land = load_landscape(out / "landscape.fld")
    assert land.provenance["config_sha256"] == h
    assert land.provenance["potential_sha256"] == load_field(out / "potential.fld").checksum()


def test_validation_exit(tmp_path, capsys):
    code, out = _run(tmp_path, "a", "curves", "--set", "mu_grid.min=1e-5")
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "validation"
    assert not out.exists()  # rejected before compute


def test_mu_above_resolution(tmp_path):
    code, _ = _run(tmp_path, "a", "curves", "--set", "mu_grid.max=1000")
    assert code == 2


def test_numerical_exit(tmp_path, capsys):
    code, _ = _run(tmp_path, "a", "landscape", "--set", 'potential.source="preset"',
                   "--set", 'potential.preset="constant"', "--set", "potential.c=0")
    assert code == 3
    assert json.loads(capsys.readouterr().err)["type"] == "SingularOperator"


def test_io_exit(tmp_path):
    code = main(["curves", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")])
    assert code == 4
    code, _ = _run(tmp_path, "b", "landscape", "--set", 'potential.source="file"',
                   "--set", f'potential.path="{tmp_path / "nope.fld"}"')
    assert code == 4


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schema_version": 1, "grid": {"dim": 1, "R0": 32, "n": 8}}))
    merged = load_config(str(cfg), "curves", ["grid.R0=16"])
    assert merged["grid"]["R0"] == 16
    assert merged["grid"]["n"] == 8
    with pytest.raises(ValidationError):
        load_config(None, "curves", ["schema_version=2"])
    with pytest.raises(ValidationError):
        apply_overrides(DEFAULTS, ["noequals"])
    assert config_hash(merged) == config_hash(json.loads(json.dumps(merged)))


def test_potential_file_roundtrip(tmp_path):
    code, a = _run(tmp_path, "a", "gen-potential", "--set", "grid.R0=16", "--seed", "5")
    assert code == 0
    code, b = _run(tmp_path, "b", "landscape", "--set", "grid.R0=16", "--set", 'potential.source="file"',
                   "--set", f'potential.path="{a / "potential.fld"}"')
    assert code == 0
    assert load_field(b / "potential.fld").checksum() == load_field(a / "potential.fld").checksum()
    code, _ = _run(tmp_path, "c", "landscape", "--set", "grid.R0=32", "--set", 'potential.source="file"',
                   "--set", f'potential.path="{a / "potential.fld"}"')
    assert code == 2


def test_ensemble_and_dump(tmp_path):
    code, out = _run(tmp_path, "e", "ensemble", "--set", "grid.R0=16", "--set", "ensemble.realizations=3")
    assert code == 0
    rep = json.loads((out / "ensemble.json").read_text())
    assert rep["realizations_used"] == 3
    assert len(rep["realization_checksums"]) == 3
    code, out = _run(tmp_path, "s", "spectrum", "--set", "grid.R0=4", "--dump-matrix")
    assert code == 0
    assert len((out / "matrix.coo").read_text().splitlines()) == 32 * 3


def test_figure1_small(tmp_path):
    code, out = _run(tmp_path, "f", "figure1", "--set", "grid.R0=64", "--set", "figure1.points=200")
    assert code == 0
    cols, _ = read_curves_csv(out / "figure1.csv")
    assert list(cols) == ["mu", "N", "N_V", "N_W"]
    assert cols["N"][-1] >= 0.5 * 64 * 8
    info = json.loads((out / "figure1.json").read_text())
    assert set(info["low_windows"]) == {"0.02", "0.05", "0.1"}


def test_thread_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("LLAB_THREADS", "1")
    code, _ = _run(tmp_path, "a", "gen-potential", "--set", "grid.R0=8")
    assert code == 0
    monkeypatch.setenv("LLAB_THREADS", "many")
    code, _ = _run(tmp_path, "b", "gen-potential", "--set", "grid.R0=8")
    assert code == 2
