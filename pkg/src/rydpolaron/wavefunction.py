"""Quantum-defect Rydberg electron radial wavefunctions.

The valence electron sees a pure Coulomb field outside the core; core effects
enter only through the quantum defect, which fixes the binding energy
``-Ry / (n - delta)**2``. The radial equation is integrated inward with
Numerov's method on a geometric grid, written in ``x = ln r`` with
``u(r) = sqrt(r) w(x)`` so the step is uniform::

    w''(x) = [(l + 1/2)^2 - 2 r - 2 E r^2] w(x)       (atomic units)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .physics import RadialGrid

DEFAULT_QUANTUM_DEFECT = 3.371
R_MIN = 2.0


class WavefunctionError(RuntimeError):
    pass


@dataclass(frozen=True)
class RydbergState:
    n: int
    l: int = 0
    quantum_defect: float = DEFAULT_QUANTUM_DEFECT

    def __post_init__(self):
        if self.n < 1 or self.l < 0 or self.l >= self.n:
            raise ValueError(f"invalid quantum numbers n={self.n}, l={self.l}")
        if self.effective_n <= self.l:
            raise ValueError("effective principal quantum number must exceed l")

    @property
    def effective_n(self) -> float:
        return self.n - self.quantum_defect

    @property
    def energy(self) -> float:
        """Binding energy in Hartree."""
        return -0.5 / self.effective_n ** 2

    @property
    def turning_point(self) -> float:
        return 2.0 * self.effective_n ** 2


@dataclass(frozen=True, eq=False)
class RadialWavefunction:
    grid: RadialGrid
    u: np.ndarray
    state: RydbergState

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def density(self) -> np.ndarray:
        """Spherically averaged electron density |Psi|^2 in bohr^-3."""
        return self.u ** 2 / (4.0 * math.pi * self.r ** 2)

    def norm(self) -> float:
        return self.grid.integrate(self.u ** 2)

    def node_count(self) -> int:
        u = self.u[np.abs(self.u) > 1e-12 * np.max(np.abs(self.u))]
        return int(np.count_nonzero(np.signbit(u[1:]) != np.signbit(u[:-1])))


def default_grid(state: RydbergState, n_points: int = 40001,
                 r_min: float = R_MIN) -> RadialGrid:
    """Geometric grid reaching ~3 n*^2, well into the forbidden tail."""
    r_max = 3.0 * state.effective_n ** 2 + 40.0 * state.effective_n + 40.0
    return RadialGrid.geometric(r_min, r_max, n_points)


def _numerov_inward(state: RydbergState, grid: RadialGrid) -> np.ndarray:
    r = grid.r
    h = grid.log_step
    E = state.energy
    g = (state.l + 0.5) ** 2 - 2.0 * r - 2.0 * E * r ** 2
    f = 1.0 - h * h * g / 12.0
    # seed the last two points with the asymptotic Coulomb tail
    # u ~ r^n* exp(-r/n*), i.e. w ~ r^(n*-1/2) exp(-r/n*)
    ns = state.effective_n
    logw = (ns - 0.5) * np.log(r[-2:]) - r[-2:] / ns
    w = np.empty_like(r)
    w[-1] = 1.0
    w[-2] = math.exp(logw[0] - logw[1])
    c = 12.0 - 10.0 * f
    for i in range(r.size - 2, 0, -1):
        w[i - 1] = (c[i] * w[i] - f[i + 1] * w[i + 1]) / f[i - 1]
    return np.sqrt(r) * w


def _inner_taper(r: np.ndarray, r_min: float) -> np.ndarray:
    # smooth step from 0 at r_min to 1 at 2 r_min
    s = np.clip((r - r_min) / r_min, 0.0, 1.0)
    return np.sin(0.5 * math.pi * s) ** 2


def solve_radial(state: RydbergState, grid: RadialGrid | None = None,
                 taper: bool = True) -> RadialWavefunction:
    """Normalized reduced radial function u(r) = r R(r) for ``state``.

    The irregular Coulomb component that a non-integer effective quantum
    number forces near the origin is removed by a smooth taper over
    ``[r_min, 2 r_min]``, so u(r_min) = 0.
    """
    if grid is None:
        grid = default_grid(state)
    if grid.kind != "geometric":
        raise ValueError("solve_radial needs a geometric grid")
    if grid.r[-1] < 2.5 * state.effective_n ** 2:
        raise WavefunctionError(
            f"grid ends at {grid.r[-1]:.0f} bohr, need >= 2.5 n*^2 = "
            f"{2.5 * state.effective_n ** 2:.0f} for a decayed tail")
    h = grid.log_step
    g_max = abs((state.l + 0.5) ** 2 - 2 * grid.r[-1] - 2 * state.energy * grid.r[-1] ** 2)
    if h * h * g_max > 6.0:
        raise WavefunctionError("grid too coarse for Numerov stability")

    u = _numerov_inward(state, grid)
    if not np.all(np.isfinite(u)):
        raise WavefunctionError("non-finite values during Numerov integration")
    if taper:
        u = u * _inner_taper(grid.r, grid.r[0])
    u = u / math.sqrt(grid.integrate(u ** 2))
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    tail = abs(u[-1]) / np.max(np.abs(u))
    if tail > 1e-4:
        raise WavefunctionError(f"solution not decayed at r_max (|u|/max = {tail:.1e})")
    u.setflags(write=False)
    return RadialWavefunction(grid, u, state)


def outer_lobe_radius(wf: RadialWavefunction) -> float:
    """Radius (bohr) of the outermost local maximum of |u|^2.

    The grid maximum is refined with a parabola in ln r.
    """
    p = wf.u ** 2
    interior = (p[1:-1] > p[:-2]) & (p[1:-1] >= p[2:]) & (p[1:-1] > 1e-6 * p.max())
    idx = np.nonzero(interior)[0]
    if idx.size == 0:
        raise WavefunctionError("no local maximum in |u|^2")
    i = idx[-1] + 1
    x = np.log(wf.r[i - 1:i + 2])
    a, b, _ = np.polyfit(x - x[1], p[i - 1:i + 2], 2)
    return float(wf.r[i] * math.exp(-b / (2 * a)))


def semiclassical_momentum(r, state: RydbergState):
    """Local electron wavenumber k(r) in bohr^-1, zero past the turning point."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    k2 = 2.0 * (state.energy + 1.0 / r)
    k = np.sqrt(np.clip(k2, 0.0, None))
    return float(k) if k.ndim == 0 else k


def norm_refinement_delta(state: RydbergState, grid: RadialGrid | None = None) -> float:
    """Change of the norm integral when the log step is halved.

    The halved grid contains every coarse point; the fine solution,
    normalized on its own grid, is integrated back on the coarse grid.
    """
    if grid is None:
        grid = default_grid(state)
    coarse = solve_radial(state, grid)
    fine = solve_radial(state, grid.refined())
    return abs(grid.integrate(fine.u[::2] ** 2) - grid.integrate(coarse.u ** 2))
