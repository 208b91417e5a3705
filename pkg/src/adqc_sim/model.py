"""Anneal schedules, chain programming and the effective rotating-frame XY model.

Energies are in GHz and times in ns throughout the package.  Time evolution
always carries an explicit factor of 2*pi, i.e. ``exp(-2j*pi*H*t)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, DomainError, RangeError, ScheduleError

_GRID_EPS = 1e-9


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def chain_bonds(length: int, periodic: bool) -> list[tuple[int, int]]:
    """Nearest-neighbour bonds ``(i, i+1)``; the closing bond is ``(L-1, 0)``."""
    bonds = [(i, i + 1) for i in range(length - 1)]
    if periodic and length > 2:
        bonds.append((length - 1, 0))
    return bonds


@dataclass(frozen=True)
class AnnealSchedule:
    """Tabulated transverse (A) and Ising (B) energy scales versus ``s``.

    Values between grid points come from monotone piecewise-cubic (PCHIP)
    interpolation, which keeps A non-increasing and B non-decreasing.
    """

    s_grid: np.ndarray
    a_values: np.ndarray
    b_values: np.ndarray
    _a_interp: PchipInterpolator = field(init=False, repr=False, compare=False)
    _b_interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        s = _frozen(self.s_grid)
        a = _frozen(self.a_values)
        b = _frozen(self.b_values)
        if s.ndim != 1 or s.shape != a.shape or s.shape != b.shape:
            raise ScheduleError("s, A and B must be 1-d arrays of equal length")
        if s.size < 2:
            raise ScheduleError("schedule needs at least two grid points")
        if np.any(np.diff(s) <= 0):
            raise ScheduleError("s grid must be strictly increasing")
        if s[0] > _GRID_EPS or s[-1] < 1.0 - _GRID_EPS:
            raise ScheduleError("s grid must cover [0, 1]")
        if np.any(a < 0) or np.any(b < 0):
            raise ScheduleError("energy scales must be non-negative")
        if np.any(np.diff(a) > 0):
            raise ScheduleError("A(s) must be non-increasing")
        if np.any(np.diff(b) < 0):
            raise ScheduleError("B(s) must be non-decreasing")
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "a_values", a)
        object.__setattr__(self, "b_values", b)
        object.__setattr__(self, "_a_interp", PchipInterpolator(s, a, extrapolate=False))
        object.__setattr__(self, "_b_interp", PchipInterpolator(s, b, extrapolate=False))

    def _check(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if np.any(~np.isfinite(s)) or np.any(s < -_GRID_EPS) or np.any(s > 1.0 + _GRID_EPS):
            raise DomainError(f"anneal parameter outside [0, 1]: {s}")
        return np.clip(s, self.s_grid[0], self.s_grid[-1])

    def A(self, s):
        """Transverse energy scale in GHz."""
        return np.maximum(self._a_interp(self._check(s)), 0.0)

    def B(self, s):
        """Ising energy scale in GHz."""
        return np.maximum(self._b_interp(self._check(s)), 0.0)

    @classmethod
    def from_file(cls, path) -> "AnnealSchedule":
        """Read a delimited schedule file.

        A header line is required.  Three columns are read as
        ``(s, A_GHz, B_GHz)``; two columns as ``(A_GHz, B_GHz)`` on a uniform
        grid spanning [0, 1].  Lines starting with ``#`` are ignored.
        """
        text = Path(path).read_text()
        return cls._parse(text, str(path))

    @classmethod
    def default(cls) -> "AnnealSchedule":
        """The synthetic schedule shipped with the package (version 1)."""
        text = resources.files("adqc_sim.data").joinpath("default_schedule.csv").read_text()
        return cls._parse(text, "default_schedule.csv")

    @classmethod
    def _parse(cls, text: str, name: str) -> "AnnealSchedule":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines:
            raise ScheduleError(f"{name}: empty schedule file")
        dialect = csv.Sniffer().sniff(lines[0], delimiters=",;\t ")
        rows = list(csv.reader(lines, dialect))
        header, body = rows[0], rows[1:]
        try:
            float(header[0])
        except ValueError:
            pass
        else:
            raise ScheduleError(f"{name}: header line required")
        try:
            data = np.array([[float(x) for x in row if x != ""] for row in body])
        except ValueError as exc:
            raise ScheduleError(f"{name}: non-numeric entry ({exc})") from None
        if data.ndim != 2 or data.shape[1] not in (2, 3):
            raise ScheduleError(f"{name}: expected 2 or 3 columns")
        if data.shape[1] == 2:
            s = np.linspace(0.0, 1.0, data.shape[0])
            return cls(s, data[:, 0], data[:, 1])
        return cls(data[:, 0], data[:, 1], data[:, 2])


@dataclass(frozen=True)
class ChainSpec:
    """Programmed parameters of a chain of target qubits.

    ``couplings`` are the dimensionless programmed J_{i,i+1}; ``anneal_offsets``
    are per-site shifts added to the operating point ``s_star``.
    """

    length: int
    periodic: bool
    couplings: np.ndarray
    anneal_offsets: np.ndarray | None = None
    s_star: float = 0.5
    longitudinal_fields: np.ndarray | None = None
    j_range: float = 2.0

    def __post_init__(self):
        L = int(self.length)
        if L < 1:
            raise ValueError("chain length must be positive")
        n_bonds = len(chain_bonds(L, self.periodic))
        J = _frozen(self.couplings)
        if J.shape != (n_bonds,):
            raise ValueError(f"expected {n_bonds} couplings for this chain, got {J.shape}")
        offsets = _frozen(np.zeros(L) if self.anneal_offsets is None else self.anneal_offsets)
        h = _frozen(np.zeros(L) if self.longitudinal_fields is None else self.longitudinal_fields)
        if offsets.shape != (L,) or h.shape != (L,):
            raise ValueError("per-site arrays must have one entry per site")
        if np.any(np.abs(J) > self.j_range):
            raise RangeError(f"|J| exceeds programmable range {self.j_range}")
        s_sites = self.s_star + offsets
        if np.any(s_sites < 0) or np.any(s_sites > 1):
            raise DomainError("s_star + anneal offsets must lie in [0, 1]")
        object.__setattr__(self, "length", L)
        object.__setattr__(self, "couplings", J)
        object.__setattr__(self, "anneal_offsets", offsets)
        object.__setattr__(self, "longitudinal_fields", h)

    @property
    def bonds(self) -> list[tuple[int, int]]:
        return chain_bonds(self.length, self.periodic)

    @property
    def site_s(self) -> np.ndarray:
        return self.s_star + self.anneal_offsets

    @classmethod
    def from_file(cls, path) -> "ChainSpec":
        """Load a YAML key-value chain description.

        Keys: ``length`` (int), ``periodic`` (bool), ``couplings`` (list or a
        scalar broadcast over bonds), ``anneal_offsets`` (list, optional),
        ``s_star`` (float), ``longitudinal_fields`` (list, optional),
        ``j_range`` (float, optional).  Unknown keys are rejected.
        """
        raw = yaml.safe_load(Path(path).read_text()) or {}
        allowed = {"length", "periodic", "couplings", "anneal_offsets", "s_star",
                   "longitudinal_fields", "j_range"}
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown chain keys: {sorted(unknown)}")
        for key in ("length", "periodic", "couplings", "s_star"):
            if key not in raw:
                raise ConfigError(f"missing chain key: {key}")
        couplings = raw["couplings"]
        if np.isscalar(couplings):
            couplings = [couplings] * len(chain_bonds(int(raw["length"]), bool(raw["periodic"])))
        return cls(
            length=int(raw["length"]),
            periodic=bool(raw["periodic"]),
            couplings=couplings,
            anneal_offsets=raw.get("anneal_offsets"),
            s_star=float(raw["s_star"]),
            longitudinal_fields=raw.get("longitudinal_fields"),
            j_range=float(raw.get("j_range", 2.0)),
        )


@dataclass(frozen=True)
class EffectiveXYModel:
    """Rotating-frame parameters: gap ``delta``, detunings and bond couplings (GHz)."""

    delta: float
    detunings: np.ndarray
    couplings: np.ndarray
    periodic: bool = True

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError("quantizing gap must be positive")
        dd = _frozen(self.detunings)
        J = _frozen(self.couplings)
        if dd.ndim != 1 or dd.size < 1:
            raise ValueError("detunings must be a non-empty 1-d array")
        n_bonds = len(chain_bonds(dd.size, self.periodic))
        if J.shape != (n_bonds,):
            raise ValueError(f"expected {n_bonds} couplings, got {J.shape}")
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "detunings", dd)
        object.__setattr__(self, "couplings", J)

    @property
    def length(self) -> int:
        return self.detunings.size

    @property
    def bonds(self) -> list[tuple[int, int]]:
        return chain_bonds(self.length, self.periodic)

    @property
    def site_energies(self) -> np.ndarray:
        """Per-site transverse energies ``delta + detuning`` (GHz)."""
        return self.delta + self.detunings

    def weak_coupling(self, threshold: float = 0.5) -> bool:
        jmax = np.max(np.abs(self.couplings)) if self.couplings.size else 0.0
        return bool(jmax / self.delta < threshold
                     and np.max(np.abs(self.detunings)) / self.delta < threshold)

    @classmethod
    def uniform(cls, length: int, delta: float, coupling: float, periodic: bool = True,
                detunings: Sequence[float] | None = None) -> "EffectiveXYModel":
        n_bonds = len(chain_bonds(length, periodic))
        dd = np.zeros(length) if detunings is None else detunings
        return cls(delta, dd, np.full(n_bonds, float(coupling)), periodic)


def build_effective_model(schedule: AnnealSchedule, chain: ChainSpec) -> EffectiveXYModel:
    """Map programmed chain parameters to the effective XY model at ``s_star``."""
    if np.any(chain.longitudinal_fields != 0):
        raise DomainError("longitudinal fields have no effective XY representation")
    s_sites = chain.site_s
    delta = float(schedule.A(chain.s_star))
    detunings = schedule.A(s_sites) - delta
    b_sites = schedule.B(s_sites)
    couplings = np.array([np.sqrt(b_sites[i] * b_sites[j]) * Jij
                          for (i, j), Jij in zip(chain.bonds, chain.couplings)])
    return EffectiveXYModel(delta, detunings, couplings, chain.periodic)


def compensate_couplings(schedule: AnnealSchedule, chain: ChainSpec,
                         target_couplings: Sequence[float]) -> np.ndarray:
    """Programmed J values that realise ``target_couplings`` (GHz) at the offset s values."""
    target = np.asarray(target_couplings, dtype=float)
    bonds = chain.bonds
    if target.shape != (len(bonds),):
        raise ValueError(f"expected {len(bonds)} target couplings")
    b_sites = schedule.B(chain.site_s)
    scale = np.array([np.sqrt(b_sites[i] * b_sites[j]) for i, j in bonds])
    if np.any((scale == 0) & (target != 0)):
        raise RangeError("nonzero target coupling where B(s) vanishes")
    J = np.divide(target, scale, out=np.zeros_like(target), where=scale != 0)
    if np.any(np.abs(J) > chain.j_range):
        raise RangeError(f"required |J| = {np.max(np.abs(J)):.3f} exceeds range {chain.j_range}")
    return J


def dispersion_exact(delta, coupling, k):
    """Positive quasiparticle branch of the transverse-field Ising chain (GHz)."""
    k = np.asarray(k, dtype=float)
    return np.sqrt((delta + coupling * np.cos(k)) ** 2 + (coupling * np.sin(k)) ** 2)
