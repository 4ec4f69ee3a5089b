"""Rydberg impurity spectra in a Bose gas.

Modules
-------
physics         constants, units and radial grids
wavefunction    Rydberg radial functions (Numerov)
pseudopotential electron-atom contact potential
bound_states    molecular levels and condensate overlaps in a spherical box
spectra         spectra, binomial and multinomial occupation models
fda             time-domain many-body spectra at fixed density
mean_field      mean-field shift and local-density spectra
trap            trap profiles and density-weighted averaging
pipeline, cli   configuration-driven runs
"""

from importlib import metadata as _metadata

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # pragma: no cover
    __version__ = "unknown"
