import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from lctransport import cli
from lctransport.errors import ConfigError

BUMP_CFG = "potential = gaussian(1)\nperturbation = bump(0.2, 1.0)\nn = 3\n"


@pytest.fixture
def cfg_file(tmp_path):
    def make(text, name="exp.cfg"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return make


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parse_config_keys():
    cfg = cli.parse_config("# comment\npotential = quartic_regularized(1, 0.5)\n"
                           "perturbation = cosine_bump(0.3, 2)\nn = 5  # trailing\n"
                           "grid_size = 1025\nlambda = 1\nLambda = 2.25\n")
    assert cfg.n == 5 and cfg.grid_size == 1025 and cfg.lam == 1 and cfg.Lam == 2.25
    assert cfg.V().lambda_hi == 2.25


@pytest.mark.parametrize("text", ["foo = 1", "n = two", "n = 0", "potential = nosuch(1)",
                                  "just words", "span = -1"])
def test_parse_config_rejects(text):
    with pytest.raises(ConfigError):
        cli.parse_config(text)


def test_bounds_json(capsys):
    assert cli.run(["bounds", "--R", "1", "--lambda", "1", "--Lambda", "1", "--lambda-q", "1",
                    "--json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["P"] == 8.0 and d["Q"] == 2.5
    assert {"C_prime", "P_prime", "C_tilde", "phi11_bound", "pogorelov_C", "final_C"} <= d.keys()


def test_bounds_overflow_modes(capsys):
    argv = ["bounds", "--R", "1", "--lambda", "1", "--Lambda", "1", "--lambda-q", "6", "--json"]
    assert cli.run(argv) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["overflow"] is True and d["final_C"] is None
    assert cli.run(argv + ["--strict"]) == 1


def test_bounds_missing_param_is_usage_error(capsys):
    assert cli.run(["bounds", "--R", "1"]) == 2
    assert "missing" in capsys.readouterr().err


def test_bad_flag_exit_code():
    assert cli.run(["bounds", "--nope"]) == 2
    assert cli.run([]) == 2


def test_verify_gaussian_bump(cfg_file, tmp_path):
    out = tmp_path / "v.json"
    assert cli.run(["verify", "--suite", "all", "--config", cfg_file(BUMP_CFG), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert len(data) >= 7 and all(d["passed"] for d in data)


def test_verify_missing_config():
    assert cli.run(["verify", "--config", "/nonexistent/x.cfg"]) == 2


def test_transport1d_identity(cfg_file, tmp_path):
    out = tmp_path / "t.csv"
    cfg = cfg_file("potential = gaussian(1)\nperturbation = none\ngrid_size = 513\n")
    assert cli.run(["transport1d", "--config", cfg, "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0][:3] == ["x", "T", "logTprime"]
    x, T = np.array([[float(r[0]), float(r[1])] for r in rows[1:]]).T
    assert len(x) == 513
    assert np.max(np.abs(T - x)) <= 1e-12


def test_radial_csv(cfg_file, tmp_path):
    out = tmp_path / "r.csv"
    assert cli.run(["radial", "--config", cfg_file(BUMP_CFG), "--n", "5", "--out", str(out)]) == 0
    rows = _rows(out)
    lo, hi = float(rows[1][4]), float(rows[1][5])
    eig = np.array([[float(r[2]), float(r[3])] for r in rows[1:]])
    assert np.all(eig >= lo * (1 - 1e-8)) and np.all(eig <= hi * (1 + 1e-8))


def test_psi_csv(tmp_path):
    out = tmp_path / "p.csv"
    assert cli.run(["psi", "--R", "1", "--lambda", "1", "--Lambda", "1", "--lambda-q", "1",
                    "--num", "33", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["t", "theta", "psi_prime", "psi"] and len(rows) == 34
    assert float(rows[-1][2]) == 0.0


def test_sweep_empty_values(cfg_file, tmp_path):
    out = tmp_path / "s.csv"
    assert cli.run(["sweep", "--config", cfg_file(BUMP_CFG), "--axis", "n", "--values", "",
                    "--out", str(out)]) == 0
    assert _rows(out) == [["value", "quantity", "measured", "bound", "margin", "passed"]]


def test_sweep_dimension_bound_constant():
    rows = cli.sweep(cli.parse_config(BUMP_CFG), "n", [1, 2, 3, 5, 10, 50])
    assert [r[0] for r in rows] == [1, 2, 3, 5, 10, 50]
    assert len({r[3] for r in rows}) == 1 and all(r[5] for r in rows)


def test_sweep_height():
    hs = [0.05, 0.1, 0.2, 0.4]
    cfg = cli.parse_config("perturbation = odd_bump(0.1, 1.0)\n")
    rows = cli.sweep(cfg, "height", hs)
    for h, r in zip(hs, rows):
        assert r[2] <= r[3] + 1e-8 and r[5]
    assert np.all(np.diff([r[2] for r in rows]) > 0)


def test_sweep_bad_axis_and_height_without_q():
    with pytest.raises(ConfigError):
        cli.sweep(cli.parse_config(""), "colour", [1])
    with pytest.raises(ConfigError):
        cli.sweep(cli.parse_config(""), "height", [0.1])


def test_verify_deterministic(cfg_file, tmp_path):
    cfg = cfg_file(BUMP_CFG)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cli.run(["verify", "--suite", "thm12", "--config", cfg, "--out", str(a)])
    cli.run(["verify", "--suite", "thm12", "--config", cfg, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "lctransport", "bounds", "--R", "1", "--lambda", "1",
                          "--Lambda", "1", "--lambda-q", "0", "--json"],
                         capture_output=True, text=True, check=True)
    d = json.loads(res.stdout)
    assert d["Q"] is None and d["P"] == 2.0
