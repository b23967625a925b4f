import io
import json
import math
import os
import subprocess
import sys

import pytest

from ktacnode.cli import COMMANDS, resolve, run


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def test_winding_exact_normalized():
    code, out, err = call(["winding-exact", "--n", "32", "--T", "9.8696", "--mu", "0",
                           "--omega", "-3..3"])
    assert code == 0, err
    doc = json.loads(out)
    probs = doc["result"]["prob"]
    assert doc["result"]["omega"] == list(range(-3, 4))
    assert abs(math.fsum(probs) - 1) < 1e-12
    meta = doc["metadata"]
    assert meta["config"]["n"] == 32 and meta["config"]["omega"] == [-3, 3]
    assert meta["precision"]["mantissa_bits"] == 256
    assert "residual_imag" in meta["tolerances"]


def test_winding_compare_columns():
    code, out, err = call(["winding-compare", "--n", "64", "--k", "1", "--bits", "192",
                           "--format", "csv"])
    assert code == 0, err
    lines = out.splitlines()
    assert lines[0].startswith("# metadata=")
    assert lines[1] == "omega,exact,theorem,abs_diff"
    rows = [list(map(float, l.split(","))) for l in lines[2:]]
    assert [int(r[0]) for r in rows] == list(range(-2, 5))
    for w, ex, th, d in rows:
        assert d == pytest.approx(abs(ex - th), abs=1e-15)
    meta = json.loads(lines[0][len("# metadata="):])
    assert meta["command"] == "winding-compare"


def test_unknown_flag_usage_error(tmp_path):
    target = tmp_path / "out.json"
    code, out, err = call(["winding-exact", "--n", "8", "--bogus", "1", "--out", str(target)])
    assert code == 2
    obj = json.loads(err)
    assert set(obj) == {"code", "module", "message", "context"} and obj["code"] == 2
    assert not target.exists()
    assert os.listdir(tmp_path) == []


def test_missing_required_and_bad_values():
    assert call(["winding-exact"])[0] == 2
    assert call(["winding-exact", "--n", "x"])[0] == 2
    assert call(["winding-exact", "--n", "8", "--omega", "3"])[0] == 2
    assert call(["winding-exact", "--n", "8", "--format", "xml"])[0] == 2
    assert call([])[0] == 2


def test_regime_error_code():
    code, _, err = call(["winding-asymptotic", "--n", "1000", "--T", "1.0"])
    assert code == 5 and json.loads(err)["module"] == "asymptotic"


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nn = 6\nT = 7.5\nmu = 0.01\n")
    code, out, _ = call(["winding-exact", "--config", str(cfg), "--T", "8.0", "--bits", "128"])
    assert code == 0
    conf = json.loads(out)["metadata"]["config"]
    assert conf["n"] == 6 and conf["T"] == 8.0 and conf["mu"] == 0.01 and conf["n_tau"] == 64


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 6\nwhatever = 1\n")
    assert call(["winding-exact", "--config", str(cfg)])[0] == 2
    cfg.write_text("n 6\n")
    assert call(["winding-exact", "--config", str(cfg)])[0] == 2
    assert call(["winding-exact", "--config", str(tmp_path / "missing")])[0] == 2


def test_resolve_defaults():
    r = resolve("simulate", {}, {})
    assert r["walkers"] == 3 and r["format"] == "json" and r["bits"] == 256


def test_idempotent_output(tmp_path):
    target = tmp_path / "a.json"
    argv = ["simulate", "--walkers", "2", "--samples", "200", "--T", "9", "--seed", "5",
            "--out", str(target)]
    assert call(argv)[0] == 0
    first = target.read_bytes()
    assert call(argv)[0] == 0
    assert target.read_bytes() == first
    assert sorted(os.listdir(tmp_path)) == ["a.json"]


def test_simulate_paths_file(tmp_path):
    p = tmp_path / "paths.csv"
    code, out, _ = call(["simulate", "--walkers", "1", "--samples", "3", "--seed", "1",
                         "--paths-out", str(p)])
    assert code == 0
    lines = p.read_text().splitlines()
    assert lines[0] == "sample,step,walker,angle" and len(lines) == 1 + 3 * 33


def test_backlund_ladder_and_rh_check():
    code, out, _ = call(["backlund-ladder", "--k-max", "3", "--s", "-6,0,6"])
    assert code == 0
    assert json.loads(out)["result"]["max_lambda_residual"] < 1e-8
    code, out, _ = call(["rh-check", "--bits", "128"])
    assert code == 0
    res = json.loads(out)["result"]
    assert res["det_residual"] < 1e-12 and res["jump_residual"] < 1e-10


def test_kernel_commands():
    code, out, err = call(["kernel-tacnode", "--s", "0.5", "--xi", "0,0.3", "--eta", "0,-0.2"])
    assert code == 0, err
    rows = json.loads(out)["result"]["rows"]
    assert len(rows) == 2 and rows[0]["K"] > 0
    code, out, err = call(["kernel-finite", "--n", "8", "--bits", "128", "--xi", "0.1"])
    assert code == 0, err
    assert json.loads(out)["result"]["rows"][0]["K_scaled"] > 0
    assert call(["kernel-tacnode", "--xi", "0,1", "--eta", "0,1,2"])[0] == 2


def test_hm_table_csv():
    code, out, _ = call(["hm-table", "--format", "csv", "--grid-size", "200"])
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "s,u,u_prime" and len(lines) == 202


def test_every_command_has_handler():
    from ktacnode.cli import HANDLERS
    assert set(HANDLERS) == set(COMMANDS)


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "ktacnode.cli", "rh-check", "--bits", "64",
                           "--n-points", "4"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["n_points"] == 4
