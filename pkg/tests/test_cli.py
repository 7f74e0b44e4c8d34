import json
import os
import subprocess
import sys

import pytest

from rsl.cli import COMMANDS, dumps, load_config, main, run
from rsl.errors import ConfigError

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def cfg(name):
    return os.path.join(CONFIGS, name)


def read(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


CASES = [
    ("check-triad", "check_triad.ini"),
    ("orbits", "hopf.ini"),
    ("spectrum", "ellipsoid_short.ini"),
    ("compare-formulas", "ellipsoid_short.ini"),
    ("oracle", "hopf.ini"),
    ("perturb-split", "hopf_split.ini"),
    ("variation-fd", "b_solve.ini"),
    ("b-solve", "b_solve.ini"),
    ("flow", "flow_synthetic.ini"),
    ("flow", "flow_jpath.ini"),
]


@pytest.mark.parametrize("command,config", CASES)
def test_commands_pass(tmp_path, command, config):
    out = tmp_path / "out.json"
    assert run(command, cfg(config), str(out)) == 0
    doc = read(out)
    assert set(doc) == {"meta", "results", "residuals", "pass"}
    assert doc["pass"] is True
    assert doc["meta"]["command"] == command


def test_spectrum_twisted_short_all_simple(tmp_path):
    out = tmp_path / "s.json"
    assert run("spectrum", cfg("ellipsoid_short.ini"), str(out)) == 0
    res = read(out)["results"]
    assert res["N"] == 512
    assert {c["multiplicity"] for c in res["clusters"]} == {1}
    assert all(abs(m) <= 50 for m in res["eigenvalues"])


def test_flow_writes_csv(tmp_path):
    out = tmp_path / "f.json"
    assert run("flow", cfg("flow_synthetic.ini"), str(out)) == 0
    with open(tmp_path / "flow_synthetic.csv", encoding="utf-8") as fh:
        assert fh.readline().strip() == "s,branch,mu"
    assert read(out)["results"]["net_flow"] == -2


def test_bad_key_exit_3(tmp_path, capsys):
    assert run("spectrum", cfg("bad_key.ini"), str(tmp_path / "x.json")) == 3
    assert "windw" in capsys.readouterr().err


def test_unknown_command(tmp_path, capsys):
    assert run("frobnicate", cfg("hopf.ini"), str(tmp_path / "x.json")) == 3
    assert "frobnicate" in capsys.readouterr().err


def test_config_validation(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[numerics]\nwindow = -1\n")
    with pytest.raises(ConfigError, match="window"):
        load_config(str(p))
    p.write_text("[bogus]\nx = 1\n")
    with pytest.raises(ConfigError, match="bogus"):
        load_config(str(p))
    p.write_text("[orbit]\nselect = middle\n")
    with pytest.raises(ConfigError, match="select"):
        load_config(str(p))


def test_tolerance_failure_exit_2(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[manifold]\na = 1.0\nb = 1.0\n[orbit]\nn = 64\n[numerics]\nwindow = 10\n"
                 "[command]\noracle_tol = 1e-30\n")
    out = tmp_path / "o.json"
    assert run("oracle", str(p), str(out)) == 2
    assert read(out)["pass"] is False


def test_orbit_command_needs_ellipsoid(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[manifold]\nkind = r3\n")
    assert run("spectrum", str(p), str(tmp_path / "o.json")) == 3


def test_numerical_error_reported_in_json(tmp_path):
    # splitting a simple cluster is refused
    p = tmp_path / "c.ini"
    p.write_text("[manifold]\nb = 1.4142135623730951\ntwist = 0.5\n[orbit]\nn = 128\n"
                 "[numerics]\nwindow = 10\n")
    out = tmp_path / "o.json"
    assert run("perturb-split", str(p), str(out)) == 2
    doc = read(out)
    assert doc["pass"] is False and "ValueError" in doc["results"]["error"]


@pytest.mark.parametrize("command,config", [("b-solve", "b_solve.ini"),
                                            ("perturb-split", "hopf_split.ini"),
                                            ("flow", "flow_jpath.ini")])
def test_deterministic_bytes(tmp_path, command, config):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(command, cfg(config), str(a), seed=5)
    run(command, cfg(config), str(b), seed=5)
    assert a.read_bytes() == b.read_bytes()
    assert read(a)["meta"]["config_echo"]["numerics"]["seed"] == 5


def test_canonical_json():
    s = dumps({"b": 1.0 / 3.0, "a": [float("nan"), True, None, 2]})
    assert s.index('"a"') < s.index('"b"')
    assert "0.33333333333333331" in s
    assert json.loads(s)["a"] == [None, True, None, 2]


def test_main_and_module_entry(tmp_path):
    out = tmp_path / "m.json"
    assert main(["orbits", "--config", cfg("hopf.ini"), "--out", str(out), "--quiet"]) == 0
    proc = subprocess.run([sys.executable, "-m", "rsl.cli", "orbits", "--config", cfg("hopf.ini"),
                           "--out", str(tmp_path / "n.json")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert out.read_bytes() == (tmp_path / "n.json").read_bytes()


def test_commands_listed():
    assert len(COMMANDS) == 9
