"""Single ground-state atom in the Rydberg potential, discretized in a sphere.

The radial Hamiltonian ``h = -hbar^2 lap / 2 m_red + V(r)`` is written in a
finite-volume form on uniform cells. With the similarity transform
``psi_j = sqrt(vol_j) phi_j`` it becomes a real symmetric tridiagonal matrix.

Two outer boundary conditions are offered:

``neumann`` (default)
    zero flux through the box wall. The uniform density ``phi = const`` is
    then an exact zero-energy eigenstate of ``h0``, which is precisely the
    zero-momentum condensate mode, so ``N_box p_i`` converges to the true
    occupation ``rho |<beta_i|1>|^2`` as the box grows.
``dirichlet``
    hard wall; the condensate proxy is the lowest ``h0`` eigenstate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.linalg.lapack import dgtsv

from .physics import CONST, RadialGrid
from .pseudopotential import PseudoPotential

HARTREE_HZ = CONST.hartree / CONST.planck_h


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class BoxModel:
    """Spherical box in atomic units (bohr, electron masses)."""

    box_radius: float
    n_points: int = 8000
    reduced_mass: float = CONST.atom_mass_au / 2.0
    l_max: int = 0
    boundary: str = "neumann"

    def __post_init__(self):
        if self.box_radius <= 0 or self.n_points < 16:
            raise ValueError("box needs a positive radius and at least 16 cells")
        if not 0 < self.reduced_mass <= CONST.atom_mass_au * (1 + 1e-12):
            raise ValueError("reduced mass must lie in (0, atom mass]")
        if self.boundary not in ("neumann", "dirichlet"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.l_max < 0:
            raise ValueError("l_max must be >= 0")

    @classmethod
    def for_radius(cls, r_R: float, radius_factor: float = 4.0, **kw) -> "BoxModel":
        return cls(box_radius=radius_factor * r_R, **kw)

    @property
    def grid(self) -> RadialGrid:
        return RadialGrid.cells(self.box_radius, self.n_points)

    @property
    def volume(self) -> float:
        return 4.0 * math.pi * self.box_radius ** 3 / 3.0

    def cell_volumes(self) -> np.ndarray:
        edges = self.box_radius * np.arange(self.n_points + 1) / self.n_points
        return 4.0 * math.pi * np.diff(edges ** 3) / 3.0

    def scaled(self, factor: float) -> "BoxModel":
        """Larger box with the same cell size."""
        return replace(self, box_radius=self.box_radius * factor,
                       n_points=int(round(self.n_points * factor)))

    def refined(self) -> "BoxModel":
        return replace(self, n_points=2 * self.n_points)


@dataclass(frozen=True, eq=False)
class BoundStateSet:
    """Eigenpairs of ``h`` and their overlaps with the condensate mode.

    Energies are in Hartree, sorted ascending within ``ls`` blocks and
    globally. ``overlaps`` is ``None`` until :func:`condensate_overlaps`
    has been applied. ``bound_vectors`` holds the (cell-amplitude)
    eigenvectors of the bound l=0 levels, columns in ``bound_index`` order.
    """

    energies: np.ndarray
    ls: np.ndarray
    box: BoxModel
    projections: np.ndarray | None
    s_energy: float
    s_potential: float
    bound_mask: np.ndarray
    bound_vectors: np.ndarray
    overlaps: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def bound_index(self) -> np.ndarray:
        return np.nonzero(self.bound_mask)[0]

    @property
    def n_bound(self) -> int:
        return int(np.count_nonzero(self.bound_mask))

    def energies_hz(self) -> np.ndarray:
        return self.energies * HARTREE_HZ

    def shifts_hz(self) -> np.ndarray:
        """Line positions (eps_i - eps_s0)/h in Hz."""
        return (self.energies - self.s_energy) * HARTREE_HZ

    def box_atoms(self, density_au: float) -> float:
        return density_au * self.box.volume

    def intensities(self, density_au: float) -> np.ndarray:
        """Occupation intensities lambda_i = N_box p_i."""
        if self.overlaps is None:
            raise ValueError("overlaps not computed")
        return self.box_atoms(density_au) * self.overlaps


def _tridiagonal(pot_values: np.ndarray, box: BoxModel, l: int,
                 vol: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = box.n_points
    dr = box.box_radius / n
    r = box.grid.r
    faces = dr * np.arange(n + 1)
    area = 4.0 * math.pi * faces ** 2
    c = 0.5 / box.reduced_mass
    a_in, a_out = area[:-1], area[1:].copy()
    diag_area = a_in + a_out
    if box.boundary == "neumann":
        diag_area[-1] -= a_out[-1]
    else:
        # mirror ghost cell: phi_ghost = -phi_N at distance dr
        diag_area[-1] += a_out[-1]
    d = c * diag_area / (dr * vol) + pot_values
    if l:
        d = d + c * l * (l + 1) / r ** 2
    e = -c * a_out[:-1] / (dr * np.sqrt(vol[:-1] * vol[1:]))
    return d, e


def radial_hamiltonian(pot: PseudoPotential, box: BoxModel, l: int = 0,
                       with_potential: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the symmetrized radial Hamiltonian (Hartree)."""
    vol = box.cell_volumes()
    v = pot(box.grid.r) if with_potential else np.zeros(box.n_points)
    return _tridiagonal(v, box, l, vol)


def condensate_mode(box: BoxModel) -> np.ndarray:
    """Cell amplitudes of the condensate mode |s>, unit norm."""
    return _condensate_vector(box, box.cell_volumes())


def _inverse_iteration(d: np.ndarray, e: np.ndarray, w: np.ndarray,
                       start: np.ndarray, sweeps: int = 2):
    """Eigenvectors for eigenvalues ``w`` by shifted inverse iteration.

    Yields ``(k, vector)`` one level at a time; the starting vector is the
    condensate mode, which is what the projections are taken against.
    """
    scale = np.max(np.abs(d)) + 2.0 * np.max(np.abs(e))
    for k, lam in enumerate(w):
        shift = lam + 4.0 * np.finfo(float).eps * max(abs(lam), 1e-6 * scale)
        x = start
        for _ in range(sweeps):
            for nudge in range(4):
                *_, y, info = dgtsv(e, d - shift, e, x)
                if info == 0 and np.all(np.isfinite(y)):
                    break
                # exact zero pivot: step the shift off the eigenvalue
                shift += 16.0 ** (nudge + 1) * np.finfo(float).eps * max(abs(lam), 1e-6 * scale)
            else:
                raise ConvergenceError(f"singular shifted solve at level {k}")
            x = y / np.linalg.norm(y)
        yield k, x


def _condensate_vector(box: BoxModel, vol: np.ndarray) -> np.ndarray:
    if box.boundary == "neumann":
        return np.sqrt(vol / vol.sum())
    d, e = _tridiagonal(np.zeros(box.n_points), box, 0, vol)
    w0 = eigvalsh_tridiagonal(d, e, select="i", select_range=(0, 0),
                              lapack_driver="stebz")
    _, s = next(_inverse_iteration(d, e, w0, np.sqrt(vol / vol.sum())))
    return s if s.sum() > 0 else -s


def solve_box_states(pot: PseudoPotential, box: BoxModel,
                     check_convergence: bool = False,
                     potential_range: float | None = None) -> BoundStateSet:
    """Full eigen-decomposition of the radial atom Hamiltonian in the box.

    Eigenvalues come from a QR sweep; each eigenvector is then recovered by
    inverse iteration, projected onto the condensate mode and dropped, so
    memory stays O(n_points). Bound levels (negative energy and localized
    inside the potential range) keep their eigenvectors. The range defaults
    to 2.2 n*^2 of the Rydberg state behind ``pot``.
    """
    grid = box.grid
    v_cells = pot(grid.r)
    vol = box.cell_volumes()
    s = _condensate_vector(box, vol)
    d0, e0 = _tridiagonal(np.zeros_like(v_cells), box, 0, vol)
    s_energy = float(s @ (d0 * s) + 2.0 * np.sum(e0 * s[:-1] * s[1:]))
    s_potential = float(np.sum(s * s * v_cells))
    range_r = 2.2 * pot.state.effective_n ** 2 if potential_range is None else potential_range
    outside = grid.r > range_r

    energies, ls, proj, bound, bvecs = [], [], [], [], []
    for l in range(box.l_max + 1):
        d, e = _tridiagonal(v_cells, box, l, vol)
        w = eigvalsh_tridiagonal(d, e, lapack_driver="sterf")
        energies.append(w)
        ls.append(np.full(w.size, l))
        is_b = np.zeros(w.size, dtype=bool)
        if l == 0:
            c = np.empty(w.size)
            for k, x in _inverse_iteration(d, e, w, s):
                c[k] = x @ s
                if w[k] < 0 and np.sum(x[outside] ** 2) < 0.5:
                    is_b[k] = True
                    bvecs.append(x * np.sign(x[np.argmax(np.abs(x))]))
            proj.append(c)
        else:
            proj.append(np.zeros(w.size))
        bound.append(is_b)
    energies = np.concatenate(energies)
    ls = np.concatenate(ls)
    proj = np.concatenate(proj)
    bound = np.concatenate(bound)
    order = np.argsort(energies, kind="stable")
    # bound vectors were collected in per-channel ascending order (l = 0 only)
    bvec = np.column_stack(bvecs) if bvecs else np.zeros((box.n_points, 0))
    states = BoundStateSet(
        energies=energies[order], ls=ls[order], box=box, projections=proj[order],
        s_energy=s_energy, s_potential=s_potential, bound_mask=bound[order],
        bound_vectors=bvec, meta={"potential_range_bohr": range_r})
    if check_convergence:
        delta = bound_refinement_delta(pot, box, states)
        if delta > 0.02:
            raise ConvergenceError(
                f"bound energies change by {delta:.1%} under grid doubling")
        states.meta["refinement_delta"] = delta
    return states


def condensate_overlaps(states: BoundStateSet) -> BoundStateSet:
    """Fill p_i = |<beta_i|s>|^2."""
    if states.projections is None:
        raise ValueError("eigenbasis projections missing")
    return replace(states, overlaps=states.projections ** 2)


def solve(pot: PseudoPotential, box: BoxModel, **kw) -> BoundStateSet:
    return condensate_overlaps(solve_box_states(pot, box, **kw))


def bound_energies(states: BoundStateSet) -> np.ndarray:
    return states.energies[states.bound_mask]


def bound_refinement_delta(pot: PseudoPotential, box: BoxModel,
                           states: BoundStateSet | None = None,
                           n_levels: int = 5) -> float:
    """Largest relative change of the deepest outer bound levels on doubling."""
    if states is None:
        states = solve_box_states(pot, box)
    fine = solve_box_states(pot, box.refined())
    a, b = bound_energies(states), bound_energies(fine)
    k = min(n_levels, a.size, b.size)
    if k == 0:
        return 0.0
    # compare the shallowest levels, which carry the condensate weight
    a, b = a[-k:], b[-k:]
    return float(np.max(np.abs(b / a - 1.0)))


def write_levels(states: BoundStateSet, density_m3: float, path) -> None:
    """Text table: index, l, eps/h [MHz], p_i, lambda_i."""
    rho = density_m3 * CONST.bohr_radius ** 3
    lam = states.intensities(rho)
    idx = states.bound_index
    rows = np.column_stack([idx, states.ls[idx], states.shifts_hz()[idx] / 1e6,
                            states.overlaps[idx], lam[idx]])
    np.savetxt(path, rows, fmt=["%d", "%d", "%.9e", "%.9e", "%.9e"],
               delimiter=",", header="index,l,eps_MHz,p,lambda", comments="")
