"""Command-line front-end: quantity parsing, config loading, artifacts."""

import json

import pytest

from acansim import CircuitConfig
from acansim.cli import ConfigError, dispatch, load_config, parse_quantity


def test_parse_quantity_suffixes():
    assert parse_quantity("25pF") == pytest.approx(25e-12)
    assert parse_quantity("1mH") == pytest.approx(1e-3)
    assert parse_quantity("5%") == pytest.approx(0.05)
    assert parse_quantity("1.8V") == pytest.approx(1.8)
    assert parse_quantity("80Ohm") == pytest.approx(80.0)
    assert parse_quantity("977kHz") == pytest.approx(977e3)
    assert parse_quantity("3fF") == pytest.approx(3e-15)
    assert parse_quantity("40u" + "m") == pytest.approx(40e-6)


def test_parse_quantity_bare_numbers():
    assert parse_quantity(42) == 42.0
    assert parse_quantity(2.5e-12) == 2.5e-12
    assert parse_quantity("3e-12") == pytest.approx(3e-12)
    assert parse_quantity("-1.5") == -1.5


def test_parse_quantity_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_quantity("fast")
    with pytest.raises(ConfigError):
        parse_quantity("25qF")
    with pytest.raises(ConfigError):
        parse_quantity(True)
    with pytest.raises(ConfigError):
        parse_quantity([1.0])


def test_load_config_defaults():
    assert load_config(None) == CircuitConfig()


def test_load_config_overrides(tmp_path):
    doc = {
        "pc": {"C_E": "50pF", "D": "10%"},
        "tree": {"C_s": ["2pF", "2pF"]},
        "env": {"corner": "ss", "temperature_C": 75},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    cfg = load_config(str(path))
    assert cfg.pc.c_e == pytest.approx(50e-12)
    assert cfg.pc.duty_d == pytest.approx(0.10)
    assert cfg.tree.n == 2
    assert cfg.env.corner.value == "SS"
    assert cfg.env.temperature_c == 75.0


def test_load_config_rejects_bad_documents(tmp_path):
    with pytest.raises(ConfigError, match="no such file"):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(str(bad))
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="top level"):
        load_config(str(arr))
    sec = tmp_path / "sec.json"
    sec.write_text(json.dumps({"power": {}}))
    with pytest.raises(ConfigError, match="unknown section"):
        load_config(str(sec))
    fld = tmp_path / "fld.json"
    fld.write_text(json.dumps({"pc": {"L": 1}}))
    with pytest.raises(ConfigError, match="unknown field"):
        load_config(str(fld))
    rng = tmp_path / "rng.json"
    rng.write_text(json.dumps({"pc": {"D": 0.9}}))
    with pytest.raises(ConfigError):
        load_config(str(rng))


def test_run_subcommand_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    rc = dispatch(["run", "--codes", "1100,0011,1111", "--out", str(out)])
    assert rc == 0
    assert (out / "neuron_run.csv").is_file()
    assert (out / "summary.json").is_file()
    assert (out / "manifest.json").is_file()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["cycles"] == 3
    assert summary["oracle_match"] is True
    assert len(summary["output_bits"]) == 3
    assert summary["mean_tree_energy_J"] > 0.0
    assert summary["tool"] == "acansim"
    assert summary["subcommand"] == "run"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["outputs"] == ["neuron_run.csv", "summary.json"]
    assert "created_utc" in manifest
    header = (out / "neuron_run.csv").read_text().splitlines()[0]
    assert header == "cycle,code,V_m_peak,OutP,delay_ns,E_tree_pJ,E_soma_pJ"


def test_run_trace_artifact(tmp_path):
    out = tmp_path / "out"
    rc = dispatch(["run", "--codes", "1100", "--out", str(out), "--trace"])
    assert rc == 0
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0].startswith("t,I_L,V_PC")
    assert len(lines) > 100


def test_run_artifacts_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["run", "--seed", "0", "--out"]
    assert dispatch(argv + [str(a)]) == 0
    assert dispatch(argv + [str(b)]) == 0
    for name in ("neuron_run.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_run_rejects_bad_codes(tmp_path, capsys):
    rc = dispatch(["run", "--codes", "110", "--out", str(tmp_path / "x")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_run_refuses_giant_full_sweep(tmp_path, capsys):
    doc = {"tree": {"C_s": ["1pF"] * 11}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    rc = dispatch(["run", "--config", str(path), "--out", str(tmp_path / "x")])
    assert rc == 1
    assert "--codes" in capsys.readouterr().err


def test_missing_config_is_an_error_exit(tmp_path, capsys):
    rc = dispatch(["run", "--config", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path / "x")])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error:")


def test_no_subcommand_is_a_usage_error(capsys):
    assert dispatch([]) == 2
    capsys.readouterr()


def test_optimize_freq_subcommand(tmp_path):
    doc = {"bench": {"cycles": 48, "skip": 8, "window": 20}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "out"
    rc = dispatch(["optimize-freq", "--config", str(path), "--alpha", "0.0",
                   "--out", str(out)])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["f_opt_Hz"] == pytest.approx(1e6, rel=2e-2)
    assert summary["predicted_Hz"] == pytest.approx(1e6, rel=1e-6)
    assert summary["alpha"] == 0.0


def test_bench_section_feeds_sweeps(tmp_path):
    doc = {"bench": {"cycles": 48, "skip": 8, "window": 20,
                     "f_grid": ["0.96MHz", "1MHz"], "d_grid": [0.05]}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "out"
    rc = dispatch(["sweep-freq", "--config", str(path), "--out", str(out)])
    assert rc == 0
    lines = (out / "surface_freq_duty.csv").read_text().splitlines()
    assert lines[0] == "f_Hz,duty,energy_J"
    assert len(lines) == 3
    summary = json.loads((out / "summary.json").read_text())
    assert summary["load_case"] == "all-0"
    assert summary["argmin"]["f_Hz"] == pytest.approx(1e6)
