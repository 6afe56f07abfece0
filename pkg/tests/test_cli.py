import json
import math
import subprocess
import sys

import numpy as np
import pytest

from oneshot_thermo.cli import main, parse_family
from oneshot_thermo.errors import ConfigError
from oneshot_thermo.lattice import IIDMixed, IIDPure, MarkovFamily
from oneshot_thermo.serialize import dumps_csv, dumps_json, format_double


@pytest.fixture
def op_files(tmp_path):
    files = {}
    for name, obj in (
        ("rho", {"dim": 2, "diag": [0.9, 0.1]}),
        ("sigma", {"dim": 2, "diag": [0.5, 0.5]}),
        ("ham", {"dim": 2, "diag": [0.0, 1.0]}),
    ):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(obj))
        files[name] = str(p)
    return files


def run_cli(args, capsys):
    rc = main(args)
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_divergence_identical_states_all_zero(tmp_path, capsys):
    p = tmp_path / "r.json"
    p.write_text(json.dumps({"dim": 2, "diag": [0.6, 0.4]}))
    rc, out, _ = run_cli(
        ["divergence", "--set", f"rho={p}", "--set", f"sigma={p}",
         "--format", "json"], capsys)
    assert rc == 0
    doc = json.loads(out)
    for key in ("umegaki", "d_min", "d_max", "d_hyp"):
        assert abs(doc["result"][key]["value"]) < 1e-12


def test_divergence_infinity_serializes_as_string(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    a.write_text(json.dumps({"dim": 2, "diag": [1.0, 0.0]}))
    b.write_text(json.dumps({"dim": 2, "diag": [0.0, 1.0]}))
    rc, out, _ = run_cli(
        ["divergence", "--set", f"rho={a}", "--set", f"sigma={b}",
         "--format", "json"], capsys)
    assert rc == 0
    assert json.loads(out)["result"]["umegaki"]["value"] == "inf"


def test_gap_scan_umegaki_constant_for_j_zero(tmp_path, capsys):
    cfg = tmp_path / "scan.cfg"
    cfg.write_text(
        "command = gap-scan\n"
        "state = iid_pure: up\n"
        "model = ising\n"
        "coupling = 0.0\n"
        "field = 1.0\n"
        "beta = 1.0\n"
        "epsilon = 0.05\n"
        "n_list = 8, 16, 32\n"
        "format = csv\n"
    )
    rc, out, _ = run_cli(["gap-scan", "--config", str(cfg)], capsys)
    assert rc == 0
    lines = [l for l in out.splitlines() if l and not l.startswith("#")]
    assert lines[0] == "n,eps,d_min_rate,d_max_rate,umegaki_rate,gap_rate,method,err_bound"
    expected = 1.0 + math.log(2 * math.cosh(1.0))
    for line in lines[1:]:
        rate = float(line.split(",")[4])
        assert rate == pytest.approx(expected, abs=1e-9)


def test_byte_identical_reruns(tmp_path, capsys):
    cfg = tmp_path / "mix.cfg"
    cfg.write_text(
        "command = mixture-scan\n"
        "component.1.weight = 0.5\n"
        "component.1.state = iid_pure: up\n"
        "component.2.weight = 0.5\n"
        "component.2.state = iid_pure: down\n"
        "model = ising\n"
        "coupling = 0.0\n"
        "field = 1.0\n"
        "beta = 1.0\n"
        "epsilon = 0.05\n"
        "n_list = 8, 16\n"
        "format = csv\n"
    )
    rc1, out1, _ = run_cli(["mixture-scan", "--config", str(cfg)], capsys)
    rc2, out2, _ = run_cli(["mixture-scan", "--config", str(cfg)], capsys)
    assert rc1 == rc2 == 0
    assert out1 == out2


def test_unknown_key_exit_code_2(capsys):
    rc, _, err = run_cli(["variance", "--set", "bogus=1"], capsys)
    assert rc == 2
    doc = json.loads(err)
    assert doc["error"] == "config"
    assert "bogus" in doc["message"]


def test_missing_input_exit_code_2(capsys):
    rc, _, err = run_cli(["divergence", "--set", "rho=/nonexistent.json"], capsys)
    assert rc == 2


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "v.cfg"
    cfg.write_text(
        "command = variance\nstate = iid_pure: plus\nn_list = 4\nformat = csv\n")
    rc, out, _ = run_cli(
        ["variance", "--config", str(cfg), "--set", "n_list=10"], capsys)
    assert rc == 0
    lines = [l for l in out.splitlines() if l and not l.startswith("#")]
    assert lines[1].split(",")[0] == "10"
    assert float(lines[1].split(",")[1]) == pytest.approx(0.1)


def test_work_output_file(tmp_path, op_files, capsys):
    out_path = tmp_path / "quote.json"
    rc, _, _ = run_cli(
        ["work", "--set", f"rho={op_files['rho']}",
         "--set", f"hamiltonian={op_files['ham']}",
         "--beta", "1.0", "--format", "json", "--output", str(out_path)], capsys)
    assert rc == 0
    doc = json.loads(out_path.read_text())
    quotes = {q["quantity"]: q for q in doc["result"]["quotes"]}
    assert set(quotes) == {"formation", "distillation"}
    assert quotes["formation"]["work"] >= quotes["distillation"]["work"]


def test_lorenz_csv(tmp_path, op_files, capsys):
    rc, out, _ = run_cli(
        ["lorenz", "--set", f"rho={op_files['rho']}",
         "--set", f"hamiltonian={op_files['ham']}", "--beta", "1.0"], capsys)
    assert rc == 0
    lines = [l for l in out.splitlines() if l and not l.startswith("#")]
    assert lines[0] == "x,y"
    assert lines[1].startswith("0,0")
    assert lines[-1] == "1,1"


def test_protocol_json(tmp_path, op_files, capsys):
    rc, out, _ = run_cli(
        ["protocol", "--set", f"rho={op_files['rho']}",
         "--set", f"hamiltonian={op_files['ham']}",
         "--set", "protocol=reference-frame", "--set", "delta=1.0",
         "--set", "levels=4", "--beta", "1.0", "--format", "json"], capsys)
    assert rc == 0
    doc = json.loads(out)
    assert doc["result"]["ledger"]["energy_range"] == pytest.approx(4.0)


def test_selftest_subcommand():
    r = subprocess.run(
        [sys.executable, "-m", "oneshot_thermo.cli", "divergence", "--selftest"],
        capture_output=True, text=True,
    )
    assert r.returncode == 0
    assert "[ok]" in r.stdout


def test_parse_family_forms():
    assert isinstance(parse_family("iid_pure: up"), IIDPure)
    assert isinstance(parse_family("iid_mixed: 0.8 0.2"), IIDMixed)
    fam = parse_family("markov: 0.9 0.1 ; 0.2 0.8")
    assert isinstance(fam, MarkovFamily)
    with pytest.raises(ConfigError):
        parse_family("bogus: 1")
    with pytest.raises(ConfigError):
        parse_family("iid_mixed: 0.8 0.9")


def test_format_double_17_digits():
    assert format_double(0.1) == "0.10000000000000001"
    assert format_double(float("inf")) == '"inf"'
    assert format_double(float("-inf")) == '"-inf"'
    assert format_double(-0.0) == "0"


def test_csv_rfc4180_line_endings():
    text = dumps_csv(("a", "b"), [(1, 2.5)], metadata={"k": "v"})
    assert "\r\n" in text
    assert text.startswith("# k = v\r\n")
    assert "a,b\r\n1,2.5\r\n" in text


def test_json_round_trips_through_stdlib():
    doc = {"x": [1.5, float("inf")], "nested": {"flag": True, "none": None}}
    parsed = json.loads(dumps_json(doc))
    assert parsed["x"][0] == 1.5
    assert parsed["x"][1] == "inf"
    assert parsed["nested"]["flag"] is True
