import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from adqc_sim import __version__
from adqc_sim.cli import DEFAULTS, main, resolve_config, run_experiment
from adqc_sim.errors import ConfigError
from adqc_sim.io import config_hash, read_csv

SMALL = {
    "larmor": {"t_max": 20.0},
    "exchange": {"couplings": [0.3], "t_max": 10.0},
    "chain": {"length": 8, "n_times": 64, "cross_check": False},
    "anderson": {"length": 16, "n_realizations": 3, "t_max": 4.0, "average_window": [2.0, 4.0],
                 "W": [0.0, 2.0], "small_W": [0.5, 1.0, 1.5, 2.0]},
    "detection": {"couplings": [0.0, 0.2], "steps_per_ns": 300},
    "rwa-check": {"n_cases": 2, "max_length": 4, "n_times": 41},
}


def run(exp, tmp_path, name="out", **extra):
    cfg = resolve_config(exp, {**SMALL[exp], **extra})
    return cfg, run_experiment(exp, cfg, tmp_path / name)


def test_unknown_key_and_types():
    with pytest.raises(ConfigError):
        resolve_config("larmor", {"bogus": 1})
    with pytest.raises(ConfigError):
        resolve_config("larmor", {"delta": "fast"})
    with pytest.raises(ConfigError):
        resolve_config("chain", {"basis": "y"})
    with pytest.raises(ConfigError):
        resolve_config("chain", {"engine": "exact", "length": 14})
    with pytest.raises(ConfigError):
        resolve_config("nope")
    assert resolve_config("larmor", {"delta": 2})["delta"] == 2.0
    assert resolve_config("larmor", seed=5)["seed"] == 5


def test_reference_defaults():
    assert DEFAULTS["larmor"]["delta"] == 1.0 and DEFAULTS["larmor"]["t1"] == 32.0
    assert DEFAULTS["larmor"]["t_phi"] == 12.0 and len(DEFAULTS["larmor"]["panels"]) == 6
    assert DEFAULTS["exchange"]["couplings"] == [0.0, 0.15, 0.30]
    assert (DEFAULTS["chain"]["delta"], DEFAULTS["chain"]["coupling"]) == (2.0, -0.6)
    assert (DEFAULTS["anderson"]["coupling"], DEFAULTS["anderson"]["length"]) == (0.2, 124)


@pytest.mark.parametrize("exp", sorted(SMALL))
def test_determinism_and_headers(exp, tmp_path):
    cfg, a = run(exp, tmp_path, "a")
    _, b = run(exp, tmp_path, "b")
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
        text = pa.read_text()
        if pa.suffix == ".csv":
            assert f"# adqc-sim {__version__}" in text
            assert f"# config_sha256: {config_hash(cfg)}" in text
        else:
            assert config_hash(cfg) in text


def test_larmor_outputs(tmp_path):
    cfg, files = run("larmor", tmp_path)
    data = read_csv(files[0])
    assert len([k for k in data if k.startswith("panel")]) == 6
    fits = json.loads(files[1].read_text())["panels"]
    for rec in fits:
        if rec["fit"] is not None:
            assert rec["fit"]["params"]["theta_d"] == pytest.approx(rec["theta_d"], abs=0.02)


def test_larmor_noisy_theta_round_trip(tmp_path):
    cfg, files = run("larmor", tmp_path, t_max=30.0, noise_sigma=0.02, seed=3)
    for rec in json.loads(files[1].read_text())["panels"]:
        if rec["fit"] is not None and rec["theta_d"] > 0.1:
            assert rec["fit"]["params"]["theta_d"] == pytest.approx(rec["theta_d"], abs=0.02)


def test_larmor_zero_duration(tmp_path):
    cfg, files = run("larmor", tmp_path, t0=2.0, t_max=2.0)
    data = read_csv(files[0])
    for i, (ts, ps, td, pd) in enumerate(cfg["panels"]):
        expect = np.cos(td) * np.cos(ts) + np.sin(td) * np.sin(ts) * np.cos(ps - pd)
        assert data[f"panel{i}"][0] == pytest.approx(expect, abs=1e-12)


def test_exchange_summary(tmp_path):
    _, files = run("exchange", tmp_path)
    runs = json.loads(files[1].read_text())["runs"]
    ten = [r for r in runs if r["initial_state"] == "10"][0]
    assert ten["closed_form_max_dev"] <= 0.02
    assert ten["fit"]["params"]["coupling"] == pytest.approx(0.3, abs=0.01)


def test_chain_x_ridge(tmp_path):
    _, files = run("chain", tmp_path, length=16, n_times=200, cross_check=True)
    summary = json.loads([f for f in files if f.name == "chain_summary.json"][0].read_text())
    assert summary["max_dev_bins"] <= 1.0
    assert summary["cross_check_L8_max_dev"] < 1e-8


def test_chain_z_magnon(tmp_path):
    _, files = run("chain", tmp_path, basis="z", engine="magnon", length=56, n_times=200)
    summary = json.loads([f for f in files if f.name == "chain_summary.json"][0].read_text())
    assert summary["max_dev_bins"] <= 1.0


def test_anderson_clean(tmp_path):
    _, files = run("anderson", tmp_path, length=124, t_max=20.0, average_window=[15.0, 20.0],
                   W=[0.0], small_W=[])
    summary = read_csv(files[1])
    assert abs(summary["I_late_mean"][0]) < 0.05
    assert "error" in json.loads(files[2].read_text())["scaling"]


def test_anderson_length_check(tmp_path):
    with pytest.raises(ConfigError):
        run("anderson", tmp_path, length=18)


def test_detection_zero_coupling(tmp_path):
    _, files = run("detection", tmp_path)
    data = read_csv(files[0])
    assert data["F_local"][0] == pytest.approx(data["F_nonlocal"][0], abs=1e-8)
    assert data["F_local"][1] <= data["F_local"][0] + 1e-9


def test_rwa_check_outputs(tmp_path):
    _, files = run("rwa-check", tmp_path)
    data = read_csv(files[0])
    assert np.all(data["ratio"] >= 1.8)


def test_main_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("bogus: 1\n")
    assert main(["larmor", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    cfg.write_text(yaml.safe_dump(SMALL["rwa-check"]))
    assert main(["rwa-check", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "rwa-check_meta.json").exists()
    capsys.readouterr()
    assert main(["larmor", "--print-config"]) == 0
    printed = yaml.safe_load(capsys.readouterr().out)
    assert printed == resolve_config("larmor")
    assert main(["larmor", "--workers", "0", "--print-config"]) == 2
    # a propagation step that violates the accuracy bound
    cfg.write_text("couplings: [0.0]\nsteps_per_ns: 5\n")
    assert main(["detection", "--config", str(cfg), "--out", str(tmp_path / "d")]) == 3


def test_parallel_matches_serial(tmp_path):
    cfg = resolve_config("anderson", SMALL["anderson"])
    a = run_experiment("anderson", cfg, tmp_path / "s", workers=1)
    b = run_experiment("anderson", cfg, tmp_path / "p", workers=2)
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "adqc_sim.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
