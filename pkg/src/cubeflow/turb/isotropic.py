"""Synthetic isotropic turbulence from random Fourier modes.

A velocity field is built as a sum of cosine modes with random unit
wavevectors and phases; each mode's polarization is drawn orthogonal to its
wavevector, which makes the analytic field divergence-free by construction.
Amplitudes follow a tabulated energy spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np


@dataclass
class SpectrumSpec:
    table_k: np.ndarray  # wavenumber, ascending
    table_e: np.ndarray  # energy density E(k)
    n_modes: int = 1000
    k_min: float | None = None
    k_max: float | None = None
    seed: int = 0

    def __post_init__(self):
        self.table_k = np.asarray(self.table_k, dtype=np.float64)
        self.table_e = np.asarray(self.table_e, dtype=np.float64)
        if np.any(self.table_e < 0.0):
            raise ValueError("spectrum table must be nonnegative")
        if self.table_k.size < 2 or np.any(np.diff(self.table_k) <= 0):
            raise ValueError("spectrum table needs ascending wavenumbers")
        if self.n_modes < 1:
            raise ValueError("need at least one mode")
        if self.k_min is None:
            self.k_min = float(self.table_k[0])
        if self.k_max is None:
            self.k_max = float(self.table_k[-1])
        if not self.k_min < self.k_max:
            raise ValueError("k_min must be below k_max")

    def energy_at(self, k: np.ndarray) -> np.ndarray:
        return np.interp(k, self.table_k, self.table_e, left=0.0, right=0.0)


def load_spectrum_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column text (wavenumber, energy density); '#' comments allowed."""
    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns")
    return data[:, 0], data[:, 1]


def bundled_cbc_table() -> tuple[np.ndarray, np.ndarray]:
    """Grid-turbulence decay spectrum (first station) bundled for the
    isotropic verification case; wavenumber in 1/cm, energy in cm^3/s^2."""
    ref = resources.files("cubeflow.turb").joinpath("data/cbc_spectrum_t42.txt")
    with resources.as_file(ref) as path:
        return load_spectrum_table(path)


@dataclass
class FourierModes:
    kappa: np.ndarray  # (M,)
    q: np.ndarray  # (M,) amplitudes
    khat: np.ndarray  # (M, 3) unit wavevectors
    sigma: np.ndarray  # (M, 3) unit polarizations, orthogonal to khat
    psi: np.ndarray  # (M,) phases


def sample_modes(spec: SpectrumSpec) -> FourierModes:
    """Draw all mode parameters up front (deterministic for a fixed seed)."""
    rng = np.random.default_rng(spec.seed)
    m = spec.n_modes
    dk = (spec.k_max - spec.k_min) / m
    kappa = spec.k_min + (np.arange(m) + 0.5) * dk
    e = spec.energy_at(kappa)
    if not np.any(e > 0.0):
        raise ValueError("spectrum table empty over the requested band")
    q = np.sqrt(e * dk)

    khat = rng.normal(size=(m, 3))
    khat /= np.linalg.norm(khat, axis=1)[:, None]
    psi = rng.uniform(0.0, 2.0 * np.pi, size=m)

    helper = rng.normal(size=(m, 3))
    sigma = np.cross(khat, helper)
    norm = np.linalg.norm(sigma, axis=1)
    bad = norm < 1e-12
    if bad.any():  # helper happened to align with khat
        helper[bad] = np.eye(3)[np.argmin(np.abs(khat[bad]), axis=1)]
        sigma[bad] = np.cross(khat[bad], helper[bad])
        norm = np.linalg.norm(sigma, axis=1)
    sigma /= norm[:, None]
    return FourierModes(kappa, q, khat, sigma, psi)


def generate_isotropic_field(
    points: np.ndarray, spec: SpectrumSpec, modes: FourierModes | None = None
) -> np.ndarray:
    """Velocity (m, 3) at sample points: u = 2 sum q cos(k khat.x + psi) sigma."""
    if modes is None:
        modes = sample_modes(spec)
    pts = np.asarray(points, dtype=np.float64)
    out = np.zeros((pts.shape[0], 3))
    chunk = max(1, int(4e6) // max(pts.shape[0], 1))
    for s in range(0, modes.kappa.size, chunk):
        k = modes.kappa[s : s + chunk]
        kh = modes.khat[s : s + chunk]
        sg = modes.sigma[s : s + chunk]
        ps = modes.psi[s : s + chunk]
        qs = modes.q[s : s + chunk]
        phase = (pts @ kh.T) * k[None, :] + ps[None, :]
        out += (2.0 * qs * np.cos(phase)) @ sg
    return out


def energy_spectrum(u: np.ndarray, box: float) -> tuple[np.ndarray, np.ndarray]:
    """Shell-averaged energy density of a periodic (3, n, n, n) field.

    Bins every discrete mode into shells of width 2*pi/box, so the Parseval
    sum over shells equals the mean kinetic energy exactly.
    """
    u = np.asarray(u)
    if u.ndim != 4 or u.shape[0] != 3:
        raise ValueError("expected velocity shaped (3, nx, ny, nz)")
    n = u.shape[1]
    if u.shape[1:] != (n, n, n):
        raise ValueError("expected a cubic sample region")
    uhat = np.fft.fftn(u, axes=(1, 2, 3)) / n**3
    energy = 0.5 * (np.abs(uhat) ** 2).sum(axis=0)

    freq = 2.0 * np.pi * np.fft.fftfreq(n, d=box / n)
    kx, ky, kz = np.meshgrid(freq, freq, freq, indexing="ij")
    kmag = np.sqrt(kx**2 + ky**2 + kz**2)
    dk = 2.0 * np.pi / box
    shell = np.rint(kmag / dk).astype(np.int64)
    nshell = int(shell.max()) + 1
    e_k = np.bincount(shell.ravel(), weights=energy.ravel(), minlength=nshell) / dk
    k_centers = dk * np.arange(nshell)
    return k_centers, e_k


def spectrum_parseval_gap(u: np.ndarray, box: float) -> float:
    """Relative gap between the shell sum and the mean kinetic energy."""
    k, e = energy_spectrum(u, box)
    dk = k[1] - k[0]
    total = float(np.sum(e) * dk)
    direct = 0.5 * float(np.mean((u**2).sum(axis=0)))
    return abs(total - direct) / direct if direct > 0 else 0.0
