"""Command-line drivers: ``adqc-sim <experiment> --config FILE``.

Each experiment has a flat table of defaults; a YAML config overrides any
subset of them and unknown keys are rejected before anything runs.
Exit codes: 0 success, 2 configuration error, 3 numerical accuracy failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from copy import deepcopy
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import AccuracyError, ConfigError, PhysicalityError, RegimeWarning
from .io import config_hash, write_csv, write_json

PI = float(np.pi)

DEFAULTS = {
    "larmor": {
        "delta": 1.0, "t1": 32.0, "t_phi": 12.0, "t0": 0.0,
        "t_max": 30.0, "dt": 0.1,
        # (theta_s, phi_s, theta_d, phi_d) for each panel
        "panels": [[PI, 0.0, 0.0, 0.0], [PI / 2, 0.0, PI / 2, 0.0],
                   [PI / 2, 0.0, PI / 2, PI / 2], [PI / 2, 0.0, PI / 4, 0.0],
                   [PI / 2, 0.0, 3 * PI / 4, 0.0], [PI / 3, 0.0, PI / 2, PI]],
        "noise_sigma": 0.0, "fit_window": [5.0, 28.0], "seed": 0,
    },
    "exchange": {
        "delta": 1.0, "couplings": [0.0, 0.15, 0.30], "t1": 30.0, "t_phi": 37.0,
        "t_max": 30.0, "dt": 0.1, "initial_states": ["10", "+0"], "engine": "lindblad",
        "seed": 0,
    },
    "chain": {
        "basis": "x", "engine": "fermion", "length": 56, "delta": 2.0, "coupling": -0.6,
        "dt": 0.1, "n_times": 200, "source": 0, "window": "hann", "pad": 4,
        "cross_check": True, "seed": 0,
    },
    "anderson": {
        "length": 124, "delta": 2.0, "coupling": 0.2, "W": [0.0, 1.0, 2.0, 4.0, 8.0],
        "small_W": [0.5, 1.0, 1.5, 2.0], "n_realizations": 400, "t_max": 20.0,
        "dt": 0.1, "average_window": [15.0, 20.0], "engine": "fermion", "seed": 1234,
    },
    "detection": {
        "couplings": [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3], "s_target": 0.5,
        "s_start": 0.5, "s_end": 1.0, "ramp": 2.0, "hold": 1.0,
        "detector_coupling": -0.3, "tilt": 0.0, "steps_per_ns": 1000, "seed": 0,
    },
    "rwa-check": {
        "delta": 2.0, "coupling": 0.2, "n_cases": 10, "max_length": 6,
        "coupling_time": 3.0, "n_times": 301, "disorder": 0.05, "seed": 0,
    },
}

CHOICES = {
    ("chain", "basis"): ("x", "z"),
    ("chain", "engine"): ("fermion", "magnon", "exact"),
    ("chain", "window"): ("hann", "none"),
    ("exchange", "engine"): ("lindblad",),
    ("anderson", "engine"): ("fermion",),
}


# -- configuration -------------------------------------------------------------

def _type_ok(default, value) -> bool:
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, (int, float)):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, str)
    if isinstance(default, list):
        return isinstance(value, list)
    return True


def resolve_config(experiment: str, overrides: dict | None = None,
                   seed: int | None = None) -> dict:
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    cfg = deepcopy(DEFAULTS[experiment])
    overrides = overrides or {}
    if not isinstance(overrides, dict):
        raise ConfigError("config file must contain a mapping")
    unknown = sorted(set(overrides) - set(cfg))
    if unknown:
        raise ConfigError(f"unknown config keys for {experiment}: {', '.join(unknown)}")
    for key, value in overrides.items():
        if not _type_ok(cfg[key], value):
            raise ConfigError(f"{key}: expected {type(cfg[key]).__name__}, "
                              f"got {type(value).__name__}")
        if isinstance(cfg[key], float):
            value = float(value)
        cfg[key] = value
    if seed is not None:
        cfg["seed"] = int(seed)
    for (exp, key), allowed in CHOICES.items():
        if exp == experiment and cfg[key] not in allowed:
            raise ConfigError(f"{key} must be one of {allowed}")
    _validate(experiment, cfg)
    return cfg


def _validate(experiment: str, cfg: dict) -> None:
    def positive(*keys):
        for k in keys:
            if not cfg[k] > 0:
                raise ConfigError(f"{k} must be positive")

    if experiment == "larmor":
        positive("delta", "t1", "t_phi", "dt")
        if cfg["t_max"] < cfg["t0"]:
            raise ConfigError("t_max must not precede t0")
        for p in cfg["panels"]:
            if not (isinstance(p, list) and len(p) == 4):
                raise ConfigError("each panel is [theta_s, phi_s, theta_d, phi_d]")
    elif experiment == "exchange":
        positive("delta", "t1", "t_phi", "dt", "t_max")
        for s in cfg["initial_states"]:
            if s not in ("10", "+0"):
                raise ConfigError("initial_states entries must be '10' or '+0'")
    elif experiment == "chain":
        positive("delta", "dt", "n_times", "length")
        if cfg["length"] % 2 or cfg["length"] < 4:
            raise ConfigError("length must be even and >= 4")
        if cfg["engine"] == "exact" and cfg["length"] > 12:
            raise ConfigError("exact engine limited to length <= 12")
        if cfg["engine"] == "magnon" and abs(cfg["coupling"] / cfg["delta"]) >= 1:
            raise ConfigError("magnon engine requires |coupling/delta| < 1")
        if not 0 <= cfg["source"] < cfg["length"]:
            raise ConfigError("source must be a site of the chain")
    elif experiment == "anderson":
        positive("delta", "dt", "t_max", "n_realizations", "length")
        if cfg["length"] % 2:
            raise ConfigError("length must be even")
        if any(w < 0 for w in cfg["W"] + cfg["small_W"]):
            raise ConfigError("disorder strengths must be non-negative")
    elif experiment == "detection":
        positive("ramp", "steps_per_ns")
    elif experiment == "rwa-check":
        positive("delta", "n_cases", "coupling_time", "n_times")
        if not 3 <= cfg["max_length"] <= 10:
            raise ConfigError("max_length must lie in [3, 10]")


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return data or {}


# -- experiments ---------------------------------------------------------------

def _pmap(func, items, workers: int):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, items))
    return [func(it) for it in items]


def run_larmor(cfg: dict, out: Path, workers: int = 1) -> list[Path]:
    from .fit import fit_larmor
    from .lindblad import BlochAxis, NoiseParams, larmor_magnetization

    noise = NoiseParams(cfg["t1"], cfg["t_phi"])
    n = int(round((cfg["t_max"] - cfg["t0"]) / cfg["dt"])) + 1
    t = cfg["t0"] + cfg["dt"] * np.arange(n)
    rng = np.random.default_rng(cfg["seed"])
    columns = {"t_ns": t}
    fits = []
    for i, (ts, ps, td, pd) in enumerate(cfg["panels"]):
        m = larmor_magnetization(BlochAxis(ts, ps), BlochAxis(td, pd), cfg["delta"], noise,
                                 t, cfg["t0"])
        if cfg["noise_sigma"] > 0:
            m = m + rng.normal(0.0, cfg["noise_sigma"], m.shape)
        columns[f"panel{i}"] = m
        record = {"panel": i, "theta_s": ts, "phi_s": ps, "theta_d": td, "phi_d": pd}
        lo, hi = cfg["fit_window"]
        in_window = np.sum((t - cfg["t0"] >= lo) & (t - cfg["t0"] <= hi))
        if in_window >= 4 and np.sin(ts) > 1e-9:
            fixed = {"delta": cfg["delta"], "t1": noise.t1, "t2": noise.t2,
                     "theta_s": ts, "phi_s": ps}
            res = fit_larmor(t - cfg["t0"], m, ["theta_d", "phi_d"], fixed,
                             window=(lo, hi))
            record["fit"] = res.to_dict()
        else:
            record["fit"] = None
        fits.append(record)
    files = [write_csv(out / "larmor_series.csv", columns, "larmor", cfg),
             write_json(out / "larmor_fits.json", {"config_sha256": config_hash(cfg),
                                                   "panels": fits})]
    return files


def _exchange_run(args):
    from .lindblad import (NoiseParams, expectation, lindblad_integrate,
                           two_qubit_hamiltonian)
    from .ops import SX, SZ, I2

    coupling, state, cfg = args
    noise = NoiseParams(cfg["t1"], cfg["t_phi"])
    n = int(round(cfg["t_max"] / cfg["dt"])) + 1
    t = cfg["dt"] * np.arange(n)
    H = two_qubit_hamiltonian(coupling, cfg["delta"])
    jumps = noise.jump_ops(0, 2) + noise.jump_ops(1, 2)
    q1 = np.array([0, 1]) if state == "10" else np.array([1, 1]) / np.sqrt(2)
    psi = np.kron(q1, [1, 0]).astype(complex)
    traj = lindblad_integrate(H, jumps, np.outer(psi, psi.conj()), t)
    obs = {"sz1": np.kron(SZ, I2), "sz2": np.kron(I2, SZ), "szsz": np.kron(SZ, SZ),
           "sx1": np.kron(SX, I2), "sx2": np.kron(I2, SX)}
    return t, {k: expectation(traj, o) for k, o in obs.items()}


def run_exchange(cfg: dict, out: Path, workers: int = 1) -> list[Path]:
    from .fit import fit_exchange
    from .lindblad import NoiseParams, two_qubit_exchange

    tasks = [(float(j), s, cfg) for j in cfg["couplings"] for s in cfg["initial_states"]]
    results = _pmap(_exchange_run, tasks, workers)
    columns = {"t_ns": results[0][0]}
    summary = []
    noise = NoiseParams(cfg["t1"], cfg["t_phi"])
    for (j, state, _), (t, obs) in zip(tasks, results):
        tag = f"J{j:g}_{'plus0' if state == '+0' else state}"
        for k, v in obs.items():
            columns[f"{k}_{tag}"] = v
        entry = {"coupling": j, "initial_state": state}
        if state == "10":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RegimeWarning)
                ref = two_qubit_exchange(j, noise, t)
            entry["in_regime"] = ref.in_regime
            entry["closed_form_max_dev"] = max(
                float(np.max(np.abs(getattr(ref, k) - obs[k]))) for k in ("sz1", "sz2", "szsz"))
            if j > 0:
                entry["fit"] = fit_exchange(t, obs["sz1"], obs["sz2"], obs["szsz"]).to_dict()
        summary.append(entry)
    return [write_csv(out / "exchange_series.csv", columns, "exchange", cfg),
            write_json(out / "exchange_summary.json",
                       {"config_sha256": config_hash(cfg), "runs": summary})]


def _chain_field(cfg: dict, length: int, engine: str, t: np.ndarray) -> np.ndarray:
    from .exact import build_tfim, evolve_state, x_expectations, z_expectations
    from .fermion import BdGSystem, tau_x_series, x_basis_field
    from .magnon import MagnonModel, excitation_density, m_x_profile
    from .model import EffectiveXYModel
    from .ops import product_state

    src = cfg["source"] % length
    if engine == "fermion":
        if cfg["basis"] == "x":
            return x_basis_field(BdGSystem.uniform(length, cfg["delta"], cfg["coupling"]),
                                 src, t)
        system = BdGSystem.uniform(length, cfg["delta"], cfg["coupling"], parity=-1)
        return 0.5 * (1.0 - tau_x_series(system, [src], t).T)
    if engine == "magnon":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            mm = MagnonModel(cfg["delta"], cfg["coupling"], length)
        n = (np.arange(length) - src)[:, None]
        if cfg["basis"] == "x":
            return m_x_profile(mm, n, t[None, :])
        return excitation_density(mm, n, t[None, :])
    H = build_tfim(EffectiveXYModel.uniform(length, cfg["delta"], cfg["coupling"]))
    bits = [1 if i == src else 0 for i in range(length)]
    if cfg["basis"] == "x":
        psi = (product_state([0] * length) + product_state(bits)) / np.sqrt(2)
        return x_expectations(evolve_state(H, psi, t), length).T
    return 0.5 * (1.0 - z_expectations(evolve_state(H, product_state(bits), t), length).T)


def run_chain(cfg: dict, out: Path, workers: int = 1) -> list[Path]:
    from .model import dispersion_exact
    from .spectral import SpaceTimeField, compare_dispersion, fft2, ridge

    L = cfg["length"]
    t = cfg["dt"] * np.arange(cfg["n_times"])
    values = _chain_field(cfg, L, cfg["engine"], t)
    field = SpaceTimeField.from_samples(values, t, cfg["basis"])
    spec = fft2(field, window=cfg["window"], pad=cfg["pad"])
    ks, peaks, contrast, ok = ridge(spec)
    if cfg["basis"] == "x":
        if cfg["engine"] == "magnon":
            model = cfg["delta"] + cfg["coupling"] * np.cos(ks)
        else:
            model = dispersion_exact(cfg["delta"], cfg["coupling"], ks)
    else:
        model = np.abs(2 * cfg["coupling"] * np.sin(ks / 2))
    max_dev, rms_dev = compare_dispersion(peaks[ok], model[ok], spec.bin_width)
    summary = {"config_sha256": config_hash(cfg), "bin_width_GHz": spec.bin_width,
               "max_dev_bins": max_dev, "rms_dev_bins": rms_dev,
               "n_k_qualified": int(ok.sum()), "n_k": int(ks.size)}
    if cfg["cross_check"] and cfg["engine"] != "exact":
        small = dict(cfg, length=8, source=0)
        a = _chain_field(small, 8, cfg["engine"], t[:50])
        b = _chain_field(small, 8, "exact", t[:50])
        summary["cross_check_L8_max_dev"] = float(np.max(np.abs(a - b)))
    nn, tt = np.meshgrid(np.arange(L), t, indexing="ij")
    kk, ww = np.meshgrid(spec.k_grid, spec.omega_grid, indexing="ij")
    return [
        write_csv(out / "chain_field.csv", {"site": nn.ravel(), "t_ns": tt.ravel(),
                                            "value": values.ravel()}, "chain", cfg),
        write_csv(out / "chain_spectrum.csv", {"k": kk.ravel(), "omega_GHz": ww.ravel(),
                                               "magnitude": spec.magnitude.ravel()},
                  "chain", cfg),
        write_csv(out / "chain_ridge.csv", {"k": ks, "omega_peak_GHz": peaks,
                                            "contrast": contrast, "model_GHz": model,
                                            "qualified": ok.astype(int)}, "chain", cfg),
        write_json(out / "chain_summary.json", summary),
    ]


def _anderson_task(args):
    from .fermion import BdGSystem, imbalance, staggered_sites, tau_x_series

    energies, couplings, t = args
    system = BdGSystem(energies, couplings, True, 1)
    return imbalance(tau_x_series(system, staggered_sites(len(energies)), t), t).values


def run_anderson(cfg: dict, out: Path, workers: int = 1) -> list[Path]:
    from .fermion import BdGSystem, disorder_ensemble, fit_quadratic_scaling

    L = cfg["length"]
    if (L // 2) % 2 != 0:
        raise ConfigError("the staggered state needs an even number of excitations "
                          "(length divisible by 4)")
    template = BdGSystem.uniform(L, cfg["delta"], cfg["coupling"])
    n = int(round(cfg["t_max"] / cfg["dt"])) + 1
    t = cfg["dt"] * np.arange(n)
    lo, hi = cfg["average_window"]
    sel = (t >= lo - 1e-9) & (t <= hi + 1e-9)
    w_all = list(dict.fromkeys([float(w) for w in cfg["W"] + cfg["small_W"]]))
    rows = {"W": [], "realization": [], "t_ns": [], "I": []}
    summary = []
    for W in w_all:
        ens = disorder_ensemble(template, W, cfg["n_realizations"],
                                seed=[cfg["seed"], int(round(1000 * W))])
        series = _pmap(_anderson_task, [(s.site_energies, s.couplings, t) for s in ens],
                       workers)
        late = np.array([np.mean(s[sel]) for s in series])
        for r, s in enumerate(series):
            rows["W"].extend([W] * n)
            rows["realization"].extend([r] * n)
            rows["t_ns"].extend(t)
            rows["I"].extend(s)
        stderr = float(np.std(late, ddof=1) / np.sqrt(late.size)) if late.size > 1 else 0.0
        summary.append({"W": W, "I_late_mean": float(np.mean(late)),
                        "I_late_stderr": stderr})
    small = [s for s in summary if s["W"] in cfg["small_W"]]
    fit = None
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            sf = fit_quadratic_scaling([s["W"] for s in small], [s["I_late_mean"] for s in small])
        fit = {"coefficient": sf.coefficient, "exponent": sf.exponent,
               "coefficient_err": sf.coefficient_err, "exponent_err": sf.exponent_err,
               "reference_coefficient": 0.017}
    except ValueError as exc:
        fit = {"error": str(exc)}
    return [
        write_csv(out / "anderson_series.csv", rows, "anderson", cfg),
        write_csv(out / "anderson_summary.csv",
                  {k: [s[k] for s in summary] for k in ("W", "I_late_mean", "I_late_stderr")},
                  "anderson", cfg),
        write_json(out / "anderson_fit.json", {"config_sha256": config_hash(cfg),
                                               "scaling": fit, "summary": summary}),
    ]


def _detection_point(args):
    from .detection import two_target_fidelity

    coupling, spec = args
    return two_target_fidelity(coupling, spec)


def run_detection(cfg: dict, out: Path, workers: int = 1) -> list[Path]:
    from .detection import QuenchSpec, pair_channel, readout_axis

    spec = QuenchSpec(s_target=cfg["s_target"], s_start=cfg["s_start"], s_end=cfg["s_end"],
                      ramp=cfg["ramp"], hold=cfg["hold"], coupling=cfg["detector_coupling"],
                      tilt=cfg["tilt"], steps_per_ns=int(cfg["steps_per_ns"]))
    axis = readout_axis(pair_channel(spec))
    energy = axis.to_energy_basis()
    couplings = [float(c) for c in cfg["couplings"]]
    res = _pmap(_detection_point, [(c, spec) for c in couplings], workers)
    return [
        write_csv(out / "detection_sweep.csv", {
            "coupling_GHz": couplings,
            "theta": [axis.theta] * len(couplings), "phi": [axis.phi] * len(couplings),
            "F_local": [r.local for r in res], "F_nonlocal": [r.nonlocal_ for r in res],
        }, "detection", cfg),
        write_json(out / "detection_axis.json", {
            "config_sha256": config_hash(cfg),
            "lab_basis": {"theta": axis.theta, "phi": axis.phi, "F": axis.fidelity},
            "energy_basis": {"theta": energy.theta, "phi": energy.phi, "F": energy.fidelity},
        }),
    ]


def rwa_cases(cfg: dict):
    """Seeded random chains and product states with at least two excitations."""
    rng = np.random.default_rng(cfg["seed"])
    cases = []
    for _ in range(int(cfg["n_cases"])):
        L = int(rng.integers(3, cfg["max_length"] + 1))
        while True:
            bits = rng.integers(0, 2, L)
            if 2 <= bits.sum() < L:
                break
        J = cfg["coupling"] * rng.uniform(0.5, 1.0, L) * rng.choice([-1.0, 1.0], L)
        dd = rng.uniform(-cfg["disorder"], cfg["disorder"], L)
        cases.append((bits, dd, J))
    return cases


def run_rwa_check(cfg: dict, out: Path, workers: int = 1) -> list[Path]:
    from .exact import rwa_error
    from .model import EffectiveXYModel
    from .ops import product_state

    t = np.linspace(0.0, cfg["coupling_time"] / abs(cfg["coupling"]), int(cfg["n_times"]))
    rows = {"case": [], "length": [], "state": [], "err_delta": [], "err_2delta": [],
            "ratio": []}
    for i, (bits, dd, J) in enumerate(rwa_cases(cfg)):
        psi = product_state(bits)
        e1 = rwa_error(EffectiveXYModel(cfg["delta"], dd, J, True), psi, t)
        e2 = rwa_error(EffectiveXYModel(2 * cfg["delta"], dd, J, True), psi, t)
        rows["case"].append(i)
        rows["length"].append(len(bits))
        rows["state"].append("".join(str(int(b)) for b in bits))
        rows["err_delta"].append(e1)
        rows["err_2delta"].append(e2)
        rows["ratio"].append(e1 / e2 if e2 > 0 else np.inf)
    ratios = np.array(rows["ratio"])
    return [write_csv(out / "rwa_check.csv", rows, "rwa-check", cfg),
            write_json(out / "rwa_summary.json", {"config_sha256": config_hash(cfg),
                                                  "min_ratio": float(ratios.min()),
                                                  "all_above_1.8": bool(np.all(ratios >= 1.8))})]


RUNNERS = {
    "larmor": run_larmor, "exchange": run_exchange, "chain": run_chain,
    "anderson": run_anderson, "detection": run_detection, "rwa-check": run_rwa_check,
}


def run_experiment(experiment: str, config: dict, out, workers: int = 1) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = RUNNERS[experiment](config, out, workers)
    meta = {"experiment": experiment, "version": __version__, "config": config,
            "config_sha256": config_hash(config), "files": sorted(p.name for p in files)}
    files.append(write_json(out / f"{experiment}_meta.json", meta))
    return files


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adqc-sim", description=__doc__.splitlines()[0])
    p.add_argument("experiment", choices=sorted(RUNNERS))
    p.add_argument("--config", help="YAML file overriding experiment defaults")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", default="adqc-out", help="output directory")
    p.add_argument("--print-config", action="store_true",
                   help="print the resolved configuration and exit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = load_config(args.config) if args.config else {}
        cfg = resolve_config(args.experiment, overrides, args.seed)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if args.print_config:
            sys.stdout.write(yaml.safe_dump(cfg, sort_keys=True))
            return 0
        files = run_experiment(args.experiment, cfg, args.out, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (AccuracyError, PhysicalityError) as exc:
        print(f"accuracy failure: {exc}", file=sys.stderr)
        return 3
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
