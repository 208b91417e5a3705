"""Damped least-squares extraction of Larmor and exchange parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DegenerateFitError

LARMOR_PARAMS = ("delta", "t1", "t2", "theta_s", "phi_s", "theta_d", "phi_d")
UNITS = {"delta": "GHz", "t1": "ns", "t2": "ns", "t_phi": "ns", "coupling": "GHz",
         "theta_s": "rad", "phi_s": "rad", "theta_d": "rad", "phi_d": "rad"}
_ANGLE_PAIRS = {"theta_s": "phi_s", "theta_d": "phi_d"}


@dataclass
class FitResult:
    params: dict
    stderr: dict
    rss: float
    converged: bool
    iterations: int
    history: list = field(default_factory=list, repr=False)

    @property
    def units(self) -> dict:
        return {k: UNITS.get(k, "") for k in self.params}

    def to_dict(self) -> dict:
        return {"params": self.params, "stderr": self.stderr, "units": self.units,
                "rss": self.rss, "converged": self.converged, "iterations": self.iterations}


@dataclass
class _LMOutcome:
    x: np.ndarray
    jac: np.ndarray
    rss: float
    converged: bool
    iterations: int
    history: list


def _fd_jacobian(fun, x, r0, rel=1e-7):
    J = np.empty((r0.size, x.size))
    for i in range(x.size):
        h = rel * max(1.0, abs(x[i]))
        xp = x.copy()
        xp[i] += h
        J[:, i] = (fun(xp) - r0) / h
    return J


def levenberg_marquardt(fun: Callable, x0, jac: Callable | None = None,
                        max_iter: int = 500, xtol: float = 1e-14,
                        ftol: float = 1e-16, project: Callable | None = None) -> _LMOutcome:
    """Minimize ``sum fun(x)^2`` with multiplicative Levenberg damping.

    The damping starts at ``1e-3`` and is divided by 10 after an accepted
    step and multiplied by 10 after a rejected one.  ``project`` maps a
    trial point back onto the parameter domain.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = fun(x)
    cost = float(r @ r)
    history = [cost]
    lam = 1e-3
    J = jac(x) if jac else _fd_jacobian(fun, x, r)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = J.T @ r
        A = J.T @ J
        diag = np.diag(A).copy()
        diag[diag == 0] = 1.0
        accepted = False
        while lam < 1e16:
            try:
                step = -np.linalg.solve(A + lam * np.diag(diag), g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            x_new = x + step
            if project is not None:
                x_new = project(x_new)
            r_new = fun(x_new)
            cost_new = float(r_new @ r_new)
            if cost_new <= cost:
                accepted = True
                break
            lam *= 10
        if not accepted:
            converged = True
            break
        small_step = np.max(np.abs(x_new - x) / np.maximum(1.0, np.abs(x))) < xtol
        small_gain = cost - cost_new <= ftol * max(cost, 1e-300)
        x, r, cost = x_new, r_new, cost_new
        history.append(cost)
        lam = max(lam / 10, 1e-12)
        J = jac(x) if jac else _fd_jacobian(fun, x, r)
        if small_step or (small_gain and cost_new > 0) or cost == 0:
            converged = True
            break
    return _LMOutcome(x, J, cost, converged, it, history)


def _covariance(J: np.ndarray, rss: float, n_points: int) -> np.ndarray:
    JTJ = J.T @ J
    dof = max(n_points - J.shape[1], 1)
    if np.linalg.matrix_rank(JTJ) < J.shape[1] or np.linalg.cond(JTJ) > 1e14:
        raise DegenerateFitError("Jacobian is rank deficient; parameters are not identifiable")
    return rss / dof * np.linalg.inv(JTJ)


# -- Larmor --------------------------------------------------------------------

def larmor_model(t, p: Mapping[str, float], t0: float = 0.0) -> np.ndarray:
    tau = np.asarray(t, dtype=float) - t0
    cd, sd = np.cos(p["theta_d"]), np.sin(p["theta_d"])
    cs, ss = np.cos(p["theta_s"]), np.sin(p["theta_s"])
    e1, e2 = np.exp(-tau / p["t1"]), np.exp(-tau / p["t2"])
    psi = 2 * np.pi * p["delta"] * tau + p["phi_s"] - p["phi_d"]
    return cd * (1 - e1 * (1 - cs)) + sd * ss * np.cos(psi) * e2


def larmor_jacobian(t, p: Mapping[str, float], names: Sequence[str],
                    t0: float = 0.0) -> np.ndarray:
    tau = np.asarray(t, dtype=float) - t0
    cd, sd = np.cos(p["theta_d"]), np.sin(p["theta_d"])
    cs, ss = np.cos(p["theta_s"]), np.sin(p["theta_s"])
    e1, e2 = np.exp(-tau / p["t1"]), np.exp(-tau / p["t2"])
    psi = 2 * np.pi * p["delta"] * tau + p["phi_s"] - p["phi_d"]
    c, s = np.cos(psi), np.sin(psi)
    cols = {
        "theta_d": -sd * (1 - e1 * (1 - cs)) + cd * ss * c * e2,
        "theta_s": -cd * e1 * ss + sd * cs * c * e2,
        "phi_s": -sd * ss * s * e2,
        "phi_d": sd * ss * s * e2,
        "delta": -sd * ss * s * e2 * 2 * np.pi * tau,
        "t1": -cd * (1 - cs) * e1 * tau / p["t1"] ** 2,
        "t2": sd * ss * c * e2 * tau / p["t2"] ** 2,
    }
    return np.stack([cols[n] for n in names], axis=1)


def _normalize_angles(p: dict, free: Sequence[str]) -> dict:
    """Fold polar angles into [0, pi] (shifting the partner azimuth) and wrap azimuths."""
    p = dict(p)
    for th, ph in _ANGLE_PAIRS.items():
        if th in free and ph in free:
            theta = np.mod(p[th], 2 * np.pi)
            if theta > np.pi:
                theta = 2 * np.pi - theta
                p[ph] += np.pi
            p[th] = theta
    for ph in ("phi_s", "phi_d"):
        if ph in free:
            p[ph] = float(np.mod(p[ph], 2 * np.pi))
    return p


def fit_larmor(t, magnetization, free: Sequence[str], fixed: Mapping[str, float],
               init: Mapping[str, float] | None = None,
               window: tuple[float, float] | None = (5.0, 28.0), t0: float = 0.0,
               n_starts: int = 8, max_iter: int = 500) -> FitResult:
    """Fit the Larmor magnetization model to ``(t, magnetization)``.

    Parameters
    ----------
    free, fixed
        Partition of ``delta, t1, t2, theta_s, phi_s, theta_d, phi_d``.
    init
        Starting values for free parameters.  Free angles without a starting
        value are seeded from a grid of ``n_starts`` (theta, phi) points and the
        best local minimum is kept.
    window
        Only samples with ``window[0] <= t <= window[1]`` enter the fit;
        ``None`` uses everything.
    """
    free = list(free)
    fixed = dict(fixed)
    if sorted(free + list(fixed)) != sorted(LARMOR_PARAMS):
        raise ValueError(f"free and fixed must partition {LARMOR_PARAMS}")
    t = np.asarray(t, dtype=float)
    y = np.asarray(magnetization, dtype=float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, y = t[sel], y[sel]
    if t.size < 2 * len(free):
        raise ValueError("need at least twice as many points as free parameters")
    init = dict(init or {})
    missing_angles = [n for n in free if n.startswith(("theta", "phi")) and n not in init]
    defaults = {"delta": 1.0, "t1": 30.0, "t2": 20.0}
    for n in free:
        if n not in init and n in defaults:
            init[n] = defaults[n]

    def unpack(x):
        p = dict(fixed)
        p.update(zip(free, x))
        return p

    def res(x):
        return larmor_model(t, unpack(x), t0) - y

    def jac(x):
        return larmor_jacobian(t, unpack(x), free, t0)

    def project(x):
        for i, n in enumerate(free):
            if n in ("t1", "t2"):
                x[i] = max(x[i], 1e-6)
        return x

    starts = [init]
    if missing_angles:
        grid = {"theta": (np.pi / 4, 3 * np.pi / 4), "phi": (0.0, np.pi / 2, np.pi, 3 * np.pi / 2)}
        options = [grid["theta" if n.startswith("theta") else "phi"] for n in missing_angles]
        combos = list(product(*options))
        idx = np.linspace(0, len(combos) - 1, min(n_starts, len(combos))).round().astype(int)
        starts = [{**init, **dict(zip(missing_angles, combos[i]))} for i in idx]
    best = None
    for s in starts:
        out = levenberg_marquardt(res, [s[n] for n in free], jac, max_iter, project=project)
        if best is None or out.rss < best.rss:
            best = out
    cov = _covariance(best.jac, best.rss, t.size)
    p = _normalize_angles(unpack(best.x), free)
    params = {n: float(p[n]) for n in free}
    stderr = {n: float(np.sqrt(max(cov[i, i], 0.0))) for i, n in enumerate(free)}
    return FitResult(params, stderr, best.rss, best.converged, best.iterations, best.history)


# -- two-qubit exchange ----------------------------------------------------------

def fit_relaxation(t, szsz, init_t1: float | None = None, max_iter: int = 500) -> FitResult:
    """Fit ``szsz = 1 - 2 exp(-t / T1)``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(szsz, dtype=float)
    if init_t1 is None:
        d = np.clip(0.5 * (1 - y), 1e-6, None)
        slope = np.polyfit(t, np.log(d), 1)[0]
        init_t1 = -1.0 / slope if slope < 0 else t.max()

    def res(x):
        return 1 - 2 * np.exp(-t / x[0]) - y

    def jac(x):
        return (-2 * np.exp(-t / x[0]) * t / x[0] ** 2)[:, None]

    out = levenberg_marquardt(res, [init_t1], jac, max_iter,
                              project=lambda x: np.maximum(x, 1e-6))
    cov = _covariance(out.jac, out.rss, t.size)
    return FitResult({"t1": float(out.x[0])}, {"t1": float(np.sqrt(cov[0, 0]))},
                     out.rss, out.converged, out.iterations, out.history)


def _fft_frequency(t, signal) -> float:
    dt = np.mean(np.diff(t))
    n = 8 * t.size
    spec = np.abs(np.fft.rfft(signal - np.mean(signal), n=n))
    freqs = np.fft.rfftfreq(n, dt)
    return float(freqs[1 + np.argmax(spec[1:])])


def fit_exchange(t, sz1, sz2, szsz, init: Mapping[str, float] | None = None,
                 max_iter: int = 500) -> FitResult:
    """Two-stage fit of ``T1``, ``T_phi`` and the exchange coupling.

    ``T1`` comes from the coupling-independent ``szsz`` decay.  With ``T1``
    held, ``sz1 - sz2 = -2 exp(-t/T1) exp(-t/T_phi) cos(2 pi J t)`` fixes the
    dephasing time and the coupling; the coupling is seeded from the
    spectral peak of the envelope-corrected difference.
    """
    t = np.asarray(t, dtype=float)
    init = dict(init or {})
    stage1 = fit_relaxation(t, szsz, init.get("t1"), max_iter)
    t1 = stage1.params["t1"]
    d = np.asarray(sz1, dtype=float) - np.asarray(sz2, dtype=float)
    j0 = init.get("coupling", _fft_frequency(t, d * np.exp(t / t1)))
    tp0 = init.get("t_phi", t.max())
    e1 = np.exp(-t / t1)

    def res(x):
        tp, J = x
        return -2 * e1 * np.exp(-t / tp) * np.cos(2 * np.pi * J * t) - d

    def jac(x):
        tp, J = x
        ep = np.exp(-t / tp)
        c, s = np.cos(2 * np.pi * J * t), np.sin(2 * np.pi * J * t)
        return np.stack([-2 * e1 * ep * c * t / tp ** 2,
                         4 * np.pi * t * e1 * ep * s], axis=1)

    def project(x):
        x[0] = max(x[0], 1e-6)
        return x

    bin_width = 1.0 / (t.max() - t.min())
    best = None
    for shift in (0.0, -0.25, 0.25):
        out = levenberg_marquardt(res, [tp0, abs(j0 + shift * bin_width)], jac, max_iter,
                                  project=project)
        if best is None or out.rss < best.rss:
            best = out
    cov = _covariance(best.jac, best.rss, t.size)
    params = {"t1": t1, "t_phi": float(best.x[0]), "coupling": float(abs(best.x[1]))}
    stderr = {"t1": stage1.stderr["t1"], "t_phi": float(np.sqrt(cov[0, 0])),
              "coupling": float(np.sqrt(cov[1, 1]))}
    return FitResult(params, stderr, stage1.rss + best.rss,
                     stage1.converged and best.converged,
                     stage1.iterations + best.iterations, best.history)


def median_bootstrap(values, n_boot: int = 2000, level: float = 0.95,
                     seed: int | None = None) -> tuple[float, float, float]:
    """Median of ``values`` and a percentile bootstrap interval."""
    v = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    meds = np.median(rng.choice(v, size=(n_boot, v.size), replace=True), axis=1)
    lo, hi = np.quantile(meds, [(1 - level) / 2, (1 + level) / 2])
    return float(np.median(v)), float(lo), float(hi)
