"""Space-time Fourier analysis of chain magnetization fields.

Transforms use the plane-wave convention ``exp(i(k n - omega t))``:

    F(k, w) = sum_{n,t} f(n, t) exp(-i k n) exp(+2 pi i w t) dt

so a travelling wave ``cos(k0 n - 2 pi w0 t)`` peaks at ``(k0, +w0)``.
Frequencies are in GHz.  Only the non-negative half of the frequency axis is
kept; for real fields the negative half is the mirror ``(-k, -w)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import LowContrastWarning

CONTRAST_THRESHOLD = 1.5


@dataclass(frozen=True)
class SpaceTimeField:
    """Real magnetization field on ``L`` sites by ``T`` uniformly spaced times."""

    values: np.ndarray
    dt: float
    basis: str = "x"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 2 or v.shape[1] < 2:
            raise ValueError("field must have at least 2 sites and 2 time points")
        if np.max(np.abs(v)) > 1 + 1e-6:
            raise ValueError("magnetization exceeds unit magnitude")
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        if self.basis not in ("x", "z"):
            raise ValueError("basis must be 'x' or 'z'")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def n_times(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_samples(cls, values, t_grid, basis: str = "x") -> "SpaceTimeField":
        t = np.asarray(t_grid, dtype=float)
        steps = np.diff(t)
        if t.size < 2 or np.ptp(steps) > 1e-9 * max(1.0, abs(steps[0])):
            raise ValueError("time grid must be uniform")
        return cls(values, float(steps[0]), basis)


@dataclass(frozen=True)
class Spectrum:
    """Magnitude of a space-time transform on ``k_grid`` x ``omega_grid``.

    ``bin_width`` is the native frequency resolution ``1 / (T dt)``; the
    omega grid may be finer when the time axis was zero-padded.
    """

    k_grid: np.ndarray
    omega_grid: np.ndarray
    magnitude: np.ndarray
    bin_width: float
    basis: str = "x"


def fft2(field: SpaceTimeField, window: str = "hann", pad: int = 1) -> Spectrum:
    """Two-dimensional transform of ``field``, windowed in time only.

    ``pad`` zero-pads the time axis to ``pad * T`` samples.  With
    ``window="none"`` and ``pad=1`` the transform obeys

        sum |f|^2 = sum_{k,w} c_w |F|^2 / (L T dt^2)

    with ``c_w = 1`` at the DC and Nyquist bins and 2 elsewhere.
    """
    L, T = field.values.shape
    if window == "hann":
        # periodic Hann so that the window itself does not widen on-grid modes
        taper = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(T) / T)
    elif window == "none":
        taper = np.ones(T)
    else:
        raise ValueError("window must be 'none' or 'hann'")
    if pad < 1:
        raise ValueError("pad factor must be >= 1")
    n_fft = pad * T
    data = field.values * taper
    # exp(-i k n) in space; exp(+i w t) in time
    spec = np.fft.fft(data, axis=0)
    spec = np.fft.ifft(spec, n=n_fft, axis=1) * n_fft * field.dt
    half = n_fft // 2 + 1
    return Spectrum(
        k_grid=2 * np.pi * np.arange(L) / L,
        omega_grid=np.arange(half) / (n_fft * field.dt),
        magnitude=np.abs(spec[:, :half]),
        bin_width=1.0 / (T * field.dt),
        basis=field.basis,
    )


def parseval_weights(n_omega: int, n_fft: int) -> np.ndarray:
    """Multiplicity of each retained frequency bin in the full spectrum."""
    w = np.full(n_omega, 2.0)
    w[0] = 1.0
    if n_fft % 2 == 0:
        w[-1] = 1.0
    return w


def _k_index(spectrum: Spectrum, k: float) -> int:
    L = spectrum.k_grid.size
    m = np.mod(k, 2 * np.pi) * L / (2 * np.pi)
    i = int(np.round(m)) % L
    if abs(m - np.round(m)) > 1e-6:
        raise ValueError(f"k = {k} is not on the momentum grid")
    return i


def ridge_contrast(spectrum: Spectrum, k: float) -> float:
    col = _ridge_column(spectrum, _k_index(spectrum, k))
    mean = np.mean(col)
    return float(np.max(col) / mean) if mean > 0 else np.inf


def _ridge_column(spectrum: Spectrum, ik: int) -> np.ndarray:
    col = spectrum.magnitude[ik].copy()
    if spectrum.basis == "z":
        # the excitation density carries a static background at every k
        df = spectrum.omega_grid[1] - spectrum.omega_grid[0]
        col[spectrum.omega_grid < 0.5 * spectrum.bin_width - 1e-12 * df] = 0.0
    return col


def extract_ridge(spectrum: Spectrum, k: float) -> float:
    """Frequency of the strongest response at momentum ``k`` (GHz).

    The arg-max is refined with a three-point parabola.  For z-basis spectra
    the static component (within half a native bin of zero) is ignored.
    """
    col = _ridge_column(spectrum, _k_index(spectrum, k))
    if col.size == 0 or not np.any(col > 0):
        raise ValueError("empty spectrum column")
    mean = np.mean(col)
    if np.max(col) < CONTRAST_THRESHOLD * mean:
        warnings.warn(f"low spectral contrast at k = {k:.4f}", LowContrastWarning)
    i = int(np.argmax(col))
    omega = spectrum.omega_grid
    if 0 < i < col.size - 1:
        a, b, c = col[i - 1], col[i], col[i + 1]
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
        return float(omega[i] + shift * (omega[1] - omega[0]))
    return float(omega[i])


def ridge(spectrum: Spectrum, contrast_min: float = CONTRAST_THRESHOLD):
    """Ridge over the full k grid; returns ``(k, omega_peak, contrast, ok)`` arrays."""
    ks = spectrum.k_grid
    peaks = np.empty(ks.size)
    contrast = np.empty(ks.size)
    for i, k in enumerate(ks):
        contrast[i] = ridge_contrast(spectrum, k)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LowContrastWarning)
            peaks[i] = extract_ridge(spectrum, k)
    return ks, peaks, contrast, contrast >= contrast_min


def compare_dispersion(ridge_omega, model_curve, bin_width: float) -> tuple[float, float]:
    """Maximum and RMS deviation between two curves, in units of ``bin_width``."""
    r = np.asarray(ridge_omega, dtype=float)
    m = np.asarray(model_curve, dtype=float)
    if r.shape != m.shape:
        raise ValueError("ridge and model must share the k grid")
    if r.size == 0:
        return 0.0, 0.0
    dev = np.abs(r - m) / bin_width
    return float(np.max(dev)), float(np.sqrt(np.mean(dev ** 2)))
