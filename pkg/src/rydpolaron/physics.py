"""Physical constants, unit conversions and radial grids.

Electron-scale quantities (wavefunctions, potentials, eigenenergies) are kept
in Hartree atomic units. Densities cross module boundaries in SI (m^-3) and
every spectral axis is in Hz. :func:`convert` is the single conversion point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.constants as sc
from scipy.special import gamma


@dataclass(frozen=True)
class Constants:
    """CODATA constants in SI units plus the default boson mass (Sr-84)."""

    bohr_radius: float = sc.physical_constants["Bohr radius"][0]
    hbar: float = sc.hbar
    electron_mass: float = sc.m_e
    planck_h: float = sc.h
    boltzmann_k: float = sc.k
    rydberg_energy: float = sc.physical_constants["Rydberg constant times hc in J"][0]
    atomic_mass_unit: float = sc.physical_constants["atomic mass constant"][0]
    atom_mass_amu: float = 83.9134

    @property
    def hartree(self) -> float:
        return 2.0 * self.rydberg_energy

    @property
    def atom_mass(self) -> float:
        return self.atom_mass_amu * self.atomic_mass_unit

    @property
    def atom_mass_au(self) -> float:
        """Atom mass in units of the electron mass."""
        return self.atom_mass / self.electron_mass

    @property
    def atomic_time(self) -> float:
        return self.hbar / self.hartree

    def __post_init__(self):
        for name in ("bohr_radius", "hbar", "electron_mass", "planck_h",
                     "boltzmann_k", "rydberg_energy", "atom_mass_amu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"constant {name} must be positive")


CONST = Constants()


# --- units -----------------------------------------------------------------

class UnitError(ValueError):
    """Unknown unit or dimensionally incompatible conversion."""


def _unit_table(c: Constants) -> dict[str, tuple[str, float]]:
    # unit -> (dimension, SI value of one unit). Frequencies are folded into
    # the energy dimension through E = h*nu.
    a0 = c.bohr_radius
    h = c.planck_h
    return {
        "m": ("length", 1.0),
        "cm": ("length", 1e-2),
        "um": ("length", 1e-6),
        "nm": ("length", 1e-9),
        "bohr": ("length", a0),
        "m^-3": ("density", 1.0),
        "cm^-3": ("density", 1e6),
        "um^-3": ("density", 1e18),
        "bohr^-3": ("density", a0 ** -3),
        "m^3": ("volume", 1.0),
        "cm^3": ("volume", 1e-6),
        "bohr^3": ("volume", a0 ** 3),
        "J": ("energy", 1.0),
        "hartree": ("energy", c.hartree),
        "rydberg": ("energy", c.rydberg_energy),
        "eV": ("energy", sc.e),
        "Hz": ("energy", h),
        "kHz": ("energy", h * 1e3),
        "MHz": ("energy", h * 1e6),
        "GHz": ("energy", h * 1e9),
        "J*m^3": ("energy_volume", 1.0),
        "hartree*bohr^3": ("energy_volume", c.hartree * a0 ** 3),
        "Hz*m^3": ("energy_volume", h),
        "s": ("time", 1.0),
        "us": ("time", 1e-6),
        "ns": ("time", 1e-9),
        "au_time": ("time", c.atomic_time),
        "kg": ("mass", 1.0),
        "amu": ("mass", c.atomic_mass_unit),
        "m_e": ("mass", c.electron_mass),
        "K": ("temperature", 1.0),
        "nK": ("temperature", 1e-9),
        "1/m": ("wavenumber", 1.0),
        "1/bohr": ("wavenumber", 1.0 / a0),
    }


@dataclass(frozen=True)
class UnitSystem:
    """Conversion table tied to one set of constants."""

    constants: Constants = CONST
    table: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "table", _unit_table(self.constants))

    def factor(self, from_unit: str, to_unit: str) -> float:
        try:
            dim_a, si_a = self.table[from_unit]
            dim_b, si_b = self.table[to_unit]
        except KeyError as exc:
            raise UnitError(f"unknown unit {exc.args[0]!r}") from None
        if dim_a != dim_b:
            raise UnitError(f"cannot convert {dim_a} ({from_unit}) to {dim_b} ({to_unit})")
        return si_a / si_b

    def convert(self, value, from_unit: str, to_unit: str):
        return value * self.factor(from_unit, to_unit)


UNITS = UnitSystem()


def convert(value, from_unit: str, to_unit: str):
    """Convert ``value`` between two compatible units.

    >>> round(convert(1.0, "bohr", "nm"), 7)
    0.0529177
    """
    return UNITS.convert(value, from_unit, to_unit)


# --- radial grids -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Ordered radial points in Bohr radii.

    ``kind`` is ``"geometric"`` (uniform in ln r), ``"uniform"`` (points at
    j*dr, last point on the box edge) or ``"cell"`` (uniform cell centres;
    the box edge ``r_box`` then lies half a spacing beyond the last point).
    """

    r: np.ndarray
    kind: str
    r_box: float

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size < 3:
            raise ValueError("grid needs at least three points")
        if r[0] <= 0 or np.any(np.diff(r) <= 0):
            raise ValueError("grid must be strictly increasing and positive")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @classmethod
    def geometric(cls, r_min: float, r_max: float, n_points: int) -> "RadialGrid":
        r = np.exp(np.linspace(math.log(r_min), math.log(r_max), n_points))
        r[0], r[-1] = r_min, r_max
        return cls(r, "geometric", r_max)

    @classmethod
    def uniform(cls, r_max: float, n_points: int) -> "RadialGrid":
        return cls(r_max * np.arange(1, n_points + 1) / n_points, "uniform", r_max)

    @classmethod
    def cells(cls, r_box: float, n_cells: int) -> "RadialGrid":
        return cls(r_box * (np.arange(n_cells) + 0.5) / n_cells, "cell", r_box)

    def __len__(self) -> int:
        return self.r.size

    @property
    def log_step(self) -> float:
        if self.kind != "geometric":
            raise ValueError("log_step only defined for geometric grids")
        return math.log(self.r[1] / self.r[0])

    @property
    def spacing(self) -> float:
        if self.kind == "geometric":
            raise ValueError("geometric grids have no single spacing")
        return self.r_box / len(self.r)

    def integrate(self, f: np.ndarray) -> float:
        """Integral of ``f(r) dr`` over the grid."""
        f = np.asarray(f)
        if self.kind == "geometric":
            # uniform in x = ln r, dr = r dx
            return float(np.trapezoid(f * self.r, dx=self.log_step))
        if self.kind == "cell":
            return float(np.sum(f) * self.spacing)
        return float(np.trapezoid(np.concatenate([[0.0], f]), dx=self.spacing))

    def refined(self) -> "RadialGrid":
        """Same span with the spacing halved."""
        n = len(self.r)
        if self.kind == "geometric":
            return RadialGrid.geometric(self.r[0], self.r[-1], 2 * n - 1)
        if self.kind == "cell":
            return RadialGrid.cells(self.r_box, 2 * n)
        return RadialGrid.uniform(self.r_box, 2 * n)


# --- gas geometry ------------------------------------------------------------

def orbital_atom_count(density: float, r_R: float) -> float:
    """Mean number of atoms inside a sphere of radius ``r_R``.

    ``density`` in m^-3, ``r_R`` in m.
    """
    if density < 0:
        raise ValueError("density must be non-negative")
    if r_R <= 0:
        raise ValueError("radius must be positive")
    return 4.0 * math.pi * density * r_R ** 3 / 3.0


def nearest_neighbor_distance(density: float) -> float:
    """Mean nearest-neighbour separation (m) of an ideal Poisson gas."""
    if density <= 0:
        raise ValueError("density must be positive")
    return gamma(4.0 / 3.0) * (4.0 * math.pi * density / 3.0) ** (-1.0 / 3.0)
