"""Small constructors shared by the tests."""

import numpy as np

from rydpolaron.bound_states import HARTREE_HZ, BoundStateSet, BoxModel
from rydpolaron.physics import CONST


def synthetic_states(shifts_hz, probabilities, box_radius=1e4):
    """BoundStateSet with prescribed line shifts and condensate overlaps."""
    f = np.asarray(shifts_hz, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    order = np.argsort(f)
    f, p = f[order], p[order]
    box = BoxModel(box_radius, 64)
    return BoundStateSet(
        energies=f / HARTREE_HZ, ls=np.zeros(f.size, dtype=int), box=box,
        projections=np.sqrt(p), s_energy=0.0,
        s_potential=float(np.sum(p * f) / HARTREE_HZ), bound_mask=f < 0,
        bound_vectors=np.zeros((box.n_points, 0)), overlaps=p)


def density_for_atoms(n_box, box):
    """m^-3 density that puts n_box atoms into the box volume."""
    return n_box / box.volume / CONST.bohr_radius ** 3
