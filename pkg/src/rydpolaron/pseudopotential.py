"""Fermi pseudopotential between the Rydberg electron and a ground-state atom.

In atomic units the Born-Oppenheimer potential felt by an atom at distance r
from the Rydberg core is::

    V(r) = 2 pi A_s(k) |Psi(r)|^2 + 6 pi A_p^3 |grad Psi(r)|^2

with the s-wave scattering length evaluated at the local semiclassical
electron momentum k(r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .physics import CONST, RadialGrid
from .wavefunction import RadialWavefunction, RydbergState, semiclassical_momentum

DEFAULT_A_S0 = -13.2
DEFAULT_POLARIZABILITY = 186.0


@dataclass(frozen=True)
class ScatteringParams:
    """Electron-atom scattering parameters in atomic units.

    ``a_p`` is a constant p-wave length used only when ``include_p_wave``
    is set; no momentum dependence is modelled for it.
    """

    a_s0: float = DEFAULT_A_S0
    polarizability: float = DEFAULT_POLARIZABILITY
    include_p_wave: bool = False
    a_p: float = 0.0

    def __post_init__(self):
        if self.polarizability < 0:
            raise ValueError("polarizability must be non-negative")


@dataclass(frozen=True, eq=False)
class PseudoPotential:
    grid: RadialGrid
    v: np.ndarray  # Hartree
    state: RydbergState
    params: ScatteringParams

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def __call__(self, r) -> np.ndarray:
        """Interpolate V onto arbitrary radii (bohr); zero outside the grid."""
        r = np.asarray(r, dtype=float)
        out = np.interp(r, self.grid.r, self.v, left=0.0, right=0.0)
        # r < r_min is inside the tapered core where |Psi|^2 = 0
        return out


def s_wave_scattering_length(k, params: ScatteringParams):
    """A_s(k) = a_s0 + (pi/3) alpha k, lengths in bohr and k in bohr^-1."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("k must be non-negative")
    a = params.a_s0 + (math.pi / 3.0) * params.polarizability * k
    return float(a) if a.ndim == 0 else a


def build_potential(wf: RadialWavefunction, params: ScatteringParams,
                    grid: RadialGrid | None = None) -> PseudoPotential:
    if grid is not None and (len(grid) != len(wf.grid) or not np.allclose(grid.r, wf.grid.r)):
        raise ValueError("potential grid does not match wavefunction grid")
    r = wf.r
    k = semiclassical_momentum(r, wf.state)
    v = 2.0 * math.pi * s_wave_scattering_length(k, params) * wf.density()
    if params.include_p_wave:
        # |grad Psi|^2 for the radial part, spherically averaged
        dudr = np.gradient(wf.u, r)
        dpsi = (dudr - wf.u / r) / r
        v = v + 6.0 * math.pi * params.a_p ** 3 * dpsi ** 2 / (4.0 * math.pi)
    v.setflags(write=False)
    return PseudoPotential(wf.grid, v, wf.state, params)


def integrated_potential(pot: PseudoPotential) -> float:
    """Volume integral of V in hartree * bohr^3."""
    return 4.0 * math.pi * pot.grid.integrate(pot.v * pot.r ** 2)


def contact_integral(a_s: float) -> float:
    """2 pi hbar^2 a / m_e in hartree * bohr^3, the alpha = 0 value of int V."""
    return 2.0 * math.pi * a_s


def write_potential(pot: PseudoPotential, path) -> None:
    """Two columns: r in nm, V/h in MHz."""
    r_nm = pot.r * CONST.bohr_radius * 1e9
    v_mhz = pot.v * CONST.hartree / CONST.planck_h / 1e6
    np.savetxt(path, np.column_stack([r_nm, v_mhz]), fmt="%.10e",
               header="r_nm V_over_h_MHz")
