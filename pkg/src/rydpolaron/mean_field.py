"""Mean-field shift and its local-density average over a density profile.

At local density rho the line sits at ``Delta(rho) = rho * int V d^3r / h``.
Averaging over the atoms of an inhomogeneous cloud gives

    A(nu) = int d^3r rho(r) delta(nu - Delta(r)) / int d^3r rho(r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bound_states import HARTREE_HZ
from .physics import CONST
from .pseudopotential import PseudoPotential, integrated_potential
from .spectra import Spectrum, SpectrumError, bin_lines, detuning_axis
from .wavefunction import RydbergState


@dataclass(frozen=True)
class MeanFieldModel:
    v_integral: float  # hartree * bohr^3
    state: RydbergState

    @classmethod
    def from_potential(cls, pot: PseudoPotential) -> "MeanFieldModel":
        v = integrated_potential(pot)
        if pot.params.polarizability == 0 and pot.params.a_s0 < 0 and v >= 0:
            raise ValueError("attractive contact interaction must integrate negative")
        return cls(v, pot.state)

    @property
    def hz_per_density(self) -> float:
        """Shift per unit density, Hz m^3."""
        return self.v_integral * HARTREE_HZ * CONST.bohr_radius ** 3


def mean_field_shift(density, model: MeanFieldModel):
    """Delta in Hz for density in m^-3."""
    rho = np.asarray(density, dtype=float)
    if np.any(rho < 0):
        raise ValueError("density must be non-negative")
    out = rho * model.hz_per_density
    return float(out) if out.ndim == 0 else out


def _radial_nodes(r_max: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    # midpoint rule in v = r^3, which is uniform in enclosed volume
    v = (np.arange(n) + 0.5) / n
    r = r_max * np.cbrt(v)
    dvol = 4.0 * math.pi * r_max ** 3 / (3.0 * n)
    return r, np.full(n, dvol)


def lda_spectrum(profile, model: MeanFieldModel, grid: np.ndarray,
                 n_radial: int = 200_000) -> Spectrum:
    """Local-density spectrum of a spherical profile, unit area.

    ``profile`` is any callable rho(r) [m^-3, r in m] with a ``r_max``
    attribute bounding its support.
    """
    r, dvol = _radial_nodes(profile.r_max, n_radial)
    rho = np.asarray(profile(r), dtype=float)
    w = rho * dvol
    nu = mean_field_shift(rho, model)
    d_max = mean_field_shift(float(np.max(rho)), model)
    lo, hi = min(0.0, d_max), max(0.0, d_max)
    if grid[0] > lo + 1e-9 * abs(d_max) or grid[-1] < hi - 1e-9 * abs(d_max):
        raise SpectrumError(
            f"grid [{grid[0]:.4g}, {grid[-1]:.4g}] Hz does not cover [0, Delta_max]")
    a = bin_lines(nu, w / w.sum(), grid)
    return Spectrum(grid, a / (a.sum() * (grid[1] - grid[0])), "unit-area")


def scaled_grid(delta_max: float, n_bins: int = 2000, margin: float = 0.05) -> np.ndarray:
    """Axis in Hz whose points sit at fixed fractions of Delta_max."""
    y = detuning_axis(-margin, 1.0 + margin, 1.0 / n_bins)
    grid = y * delta_max
    return grid if delta_max > 0 else grid[::-1]


def tf_closed_form(nu, delta_max: float) -> np.ndarray:
    """Unit-area LDA lineshape of a Thomas-Fermi cloud, (15/4) y sqrt(1-y)/|Delta_max|."""
    y = np.asarray(nu, dtype=float) / delta_max
    inside = (y >= 0) & (y <= 1)
    a = np.zeros_like(y)
    a[inside] = 3.75 * y[inside] * np.sqrt(1.0 - y[inside])
    return a / abs(delta_max)


def tf_closed_form_binned(grid: np.ndarray, delta_max: float) -> np.ndarray:
    """Closed form averaged over the linear-split kernel of each grid point.

    This is the exact expectation of binning the continuous distribution
    with the same two-bin rule used for the numerical spectrum.
    """
    step = grid[1] - grid[0]
    # average the density against the hat kernel by fine sub-sampling
    sub = 64
    u = (np.arange(2 * sub) + 0.5) / sub - 1.0  # in (-1, 1)
    hat = (1.0 - np.abs(u)) / sub
    nu = grid[:, None] + u[None, :] * step
    return np.sum(tf_closed_form(nu, delta_max) * hat[None, :], axis=1)


def density_weighted_shift(profile, model: MeanFieldModel, n_radial: int = 200_000) -> float:
    """int rho Delta d^3r / int rho d^3r by direct quadrature."""
    r, dvol = _radial_nodes(profile.r_max, n_radial)
    rho = np.asarray(profile(r), dtype=float)
    return float(np.sum(rho * mean_field_shift(rho, model) * dvol) / np.sum(rho * dvol))


def mean_field_line(density: float, model: MeanFieldModel, grid: np.ndarray) -> Spectrum:
    """Fixed-density mean-field spectrum: one line at Delta(rho)."""
    return Spectrum(grid, bin_lines([mean_field_shift(density, model)], [1.0], grid), "unit-area")
