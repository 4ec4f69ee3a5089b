"""Trapped-cloud density profiles and density-weighted spectrum averaging.

The condensate is a Thomas-Fermi inverted parabola; the thermal fraction is
a normalized Gaussian cloud. Every atom is assumed to probe the total local
density at its position (local-density approximation), so the trap spectrum
is a weighted sum of fixed-density spectra over radial shells.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .spectra import Spectrum, SpectrumError

THERMAL_REACH = 4.5  # thermal shells extend to this many 1/e radii
N_NODES = 8  # Gauss-Legendre nodes per shell


@dataclass(frozen=True)
class TrapConfig:
    """Nominal sample parameters (SI units).

    ``thermal_width`` is the 1/e radius of the Gaussian thermal cloud;
    ``None`` selects three Thomas-Fermi radii.
    """

    peak_density: float = 3.6e20
    tf_radius: float = 8e-6
    atom_number: float = 3.5e5
    temperature: float = 150e-9
    condensate_fraction: float = 0.75
    thermal_width: float | None = None

    def __post_init__(self):
        for name in ("peak_density", "tf_radius", "atom_number", "temperature"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.condensate_fraction <= 1:
            raise ValueError("condensate_fraction must lie in (0, 1]")
        if self.thermal_width is not None and not self.thermal_width > 0:
            raise ValueError("thermal_width must be positive")

    @property
    def thermal_radius(self) -> float:
        return 3.0 * self.tf_radius if self.thermal_width is None else self.thermal_width

    @property
    def condensate_number(self) -> float:
        return 8.0 * math.pi / 15.0 * self.peak_density * self.tf_radius ** 3

    @property
    def thermal_number(self) -> float:
        return (1.0 - self.condensate_fraction) * self.atom_number


@dataclass(frozen=True)
class DensityField:
    """Spherical density rho(r) in m^-3, zero beyond ``r_max``."""

    kind: str
    func: Callable[[np.ndarray], np.ndarray]
    r_max: float
    total: float  # atoms held by the analytic profile

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.r_max, self.func(r), 0.0)


def thomas_fermi_profile(cfg: TrapConfig) -> DensityField:
    rho0, R = cfg.peak_density, cfg.tf_radius
    return DensityField("thomas-fermi",
                        lambda r: rho0 * np.clip(1.0 - (r / R) ** 2, 0.0, None),
                        R, cfg.condensate_number)


def thermal_profile(cfg: TrapConfig) -> DensityField:
    w, n_th = cfg.thermal_radius, cfg.thermal_number
    peak = n_th / (math.pi ** 1.5 * w ** 3)
    return DensityField("thermal", lambda r: peak * np.exp(-(r / w) ** 2),
                        THERMAL_REACH * w, n_th)


def uniform_profile(density: float, radius: float) -> DensityField:
    return DensityField("uniform", lambda r: np.full_like(r, density), radius,
                        4.0 * math.pi * radius ** 3 * density / 3.0)


def trap_fields(cfg: TrapConfig, thermal: bool = True) -> list[DensityField]:
    fields = [thomas_fermi_profile(cfg)]
    if thermal and cfg.condensate_fraction < 1:
        fields.append(thermal_profile(cfg))
    return fields


@dataclass(frozen=True, eq=False)
class DensityShells:
    """Radial shells with their mean densities and atom numbers.

    ``node_densities`` and ``node_weights`` (shape ``(n_shells, nodes)``)
    resolve each shell with Gauss-Legendre nodes; ``weights`` are their
    row sums.
    """

    edges: np.ndarray
    densities: np.ndarray
    weights: np.ndarray
    node_densities: np.ndarray
    node_weights: np.ndarray
    n_inner: int

    @property
    def radii(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return self.densities.size


def shell_decomposition(fields: list[DensityField], n_shells: int = 64,
                        n_outer: int = 16, r_limit: float | None = None,
                        nodes: int = N_NODES) -> DensityShells:
    """Split the summed fields into equal-volume inner shells plus outer shells.

    Inner shells fill the smallest support radius among ``fields`` (or
    ``r_limit`` when given, in which case no outer shells are made); outer
    shells are equally spaced out to the largest support radius.
    """
    if n_shells < 16:
        raise ValueError("need at least 16 shells")
    r_in = min(f.r_max for f in fields)
    r_out = max(f.r_max for f in fields)
    if r_limit is not None:
        r_in, r_out = min(r_limit, r_out), min(r_limit, r_out)
    edges = r_in * np.cbrt(np.arange(n_shells + 1) / n_shells)
    n_in = n_shells
    if r_out > r_in * (1 + 1e-12) and n_outer > 0:
        edges = np.concatenate([edges, np.linspace(r_in, r_out, n_outer + 1)[1:]])
    x, wq = np.polynomial.legendre.leggauss(nodes)
    lo, hi = edges[:-1, None], edges[1:, None]
    r = 0.5 * (hi - lo) * (x[None, :] + 1.0) + lo
    rho = sum(f(r) for f in fields)
    node_w = 4.0 * math.pi * r ** 2 * rho * 0.5 * (hi - lo) * wq[None, :]
    weights = node_w.sum(axis=1)
    vol = 4.0 * math.pi * (edges[1:] ** 3 - edges[:-1] ** 3) / 3.0
    return DensityShells(edges, weights / vol, weights, rho, node_w, n_in)


def _tf_mean(x: float) -> tuple[float, float]:
    # atom-weighted mean and variance of rho/rho_max over r/R_TF <= x
    n = x ** 3 / 3 - x ** 5 / 5
    m1 = x ** 3 / 3 - 2 * x ** 5 / 5 + x ** 7 / 7
    m2 = x ** 3 / 3 - 3 * x ** 5 / 5 + 3 * x ** 7 / 7 - x ** 9 / 9
    mean = m1 / n
    return mean, m2 / n - mean ** 2


def central_radius(cfg: TrapConfig, mean_fraction: float = 0.92) -> float:
    """Radius of the central sphere whose atoms see <rho> = mean_fraction * rho_max."""
    if not 0.6 < mean_fraction < 1:
        raise ValueError("mean_fraction must lie in (0.6, 1)")
    x = brentq(lambda x: _tf_mean(x)[0] - mean_fraction, 1e-6, 1.0, xtol=1e-14)
    return x * cfg.tf_radius


@dataclass(frozen=True)
class ShellStats:
    radius: float
    mean_density: float
    relative_std: float
    atom_fraction: float


def central_shell_stats(cfg: TrapConfig, mean_fraction: float = 0.92,
                        n_shells: int = 64) -> ShellStats:
    """Atom-weighted density statistics of the condensate's central region."""
    tf = thomas_fermi_profile(cfg)
    rc = central_radius(cfg, mean_fraction)
    sh = shell_decomposition([tf], n_shells, r_limit=rc)
    w, rho = sh.node_weights.ravel(), sh.node_densities.ravel()
    mean = float(np.sum(w * rho) / w.sum())
    std = float(math.sqrt(np.sum(w * (rho - mean) ** 2) / w.sum()))
    return ShellStats(rc, mean, std / mean, sh.total / tf.total)


def trap_averaged_spectrum(shells: DensityShells, generator: Callable[[float], Spectrum],
                           resolve_nodes: bool = False, workers: int = 1) -> Spectrum:
    """Atom-weighted sum of fixed-density spectra, unit area.

    ``generator(rho)`` returns the spectrum at density rho (m^-3). With
    ``resolve_nodes`` every quadrature node is evaluated, which is needed
    for generators that return sharp lines. The sum runs in shell order
    whatever the worker count.
    """
    if resolve_nodes:
        dens, wts = shells.node_densities.ravel(), shells.node_weights.ravel()
    else:
        dens, wts = shells.densities, shells.weights
    keep = wts > 0
    dens, wts = dens[keep], wts[keep]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            spectra = list(pool.map(generator, dens))
    else:
        spectra = [generator(float(r)) for r in dens]
    grid = spectra[0].detunings
    same = all(s.detunings.size == grid.size and np.array_equal(s.detunings, grid)
               for s in spectra)
    if not same:
        step = min(s.step for s in spectra)
        lo = min(s.detunings[0] for s in spectra)
        hi = max(s.detunings[-1] for s in spectra)
        grid = lo + step * np.arange(int(math.floor((hi - lo) / step)) + 1)
    total = np.zeros(grid.size)
    for w, s in zip(wts, spectra):
        a = s.intensities if same else s.interp(grid)
        total += w * a / s.area()
    if not np.any(total > 0):
        raise SpectrumError("empty trap spectrum")
    spec = Spectrum(grid, total, "raw")
    return spec.normalized("unit-area")


def write_shells(shells: DensityShells, path) -> None:
    rows = np.column_stack([shells.edges[:-1], shells.edges[1:], shells.densities, shells.weights])
    np.savetxt(path, rows, fmt="%.12e", delimiter=",",
               header="r_inner_m,r_outer_m,density_m3,atoms", comments="")
