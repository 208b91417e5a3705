import json

import numpy as np
import pytest

from adqc_sim import __version__
from adqc_sim.io import config_hash, read_csv, write_csv, write_json, write_trajectory


def test_config_hash_order_independent():
    a = config_hash({"x": 1.0, "y": [1, 2], "z": np.float64(0.5)})
    b = config_hash({"z": 0.5, "y": [1, 2], "x": 1.0})
    assert a == b and len(a) == 64
    assert config_hash({"x": 1.0}) != config_hash({"x": 1.0000001})


def test_csv_round_trip_exact(tmp_path):
    x = np.array([0.1, 1 / 3, -2.5e-17, 1e300])
    p = write_csv(tmp_path / "a.csv", {"x": x, "n": np.arange(4)}, "demo", {"seed": 1})
    lines = p.read_text().splitlines()
    assert lines[0] == f"# adqc-sim {__version__}"
    assert lines[1] == "# experiment: demo"
    assert lines[2].startswith("# config_sha256: ")
    data = read_csv(p)
    assert np.array_equal(data["x"], x)
    assert np.array_equal(data["n"], np.arange(4))


def test_csv_length_mismatch(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "b.csv", {"a": [1, 2], "b": [1]})


def test_json_plain_types(tmp_path):
    p = write_json(tmp_path / "c.json", {"a": np.arange(3), "b": np.float32(1.5),
                                         "c": np.bool_(True), "d": np.inf})
    assert json.loads(p.read_text()) == {"a": [0, 1, 2], "b": 1.5, "c": True, "d": "inf"}


def test_trajectory_sidecar(tmp_path):
    t = np.linspace(0, 1, 5)
    p = write_trajectory(tmp_path / "traj.csv", t, {"sz": np.cos(t)}, {"t1": 30.0})
    side = json.loads(p.with_suffix(".json").read_text())
    assert side == {"version": __version__, "params": {"t1": 30.0}}
    assert np.allclose(read_csv(p)["sz"], np.cos(t))
