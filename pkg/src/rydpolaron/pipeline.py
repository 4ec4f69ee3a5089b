"""End-to-end pipelines from a run configuration to spectra and tables.

Each stage is timed; diagnostics are collected in plain dicts so the CLI can
echo them into its manifest.
"""

from __future__ import annotations

import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .bound_states import (BoundStateSet, BoxModel, ConvergenceError, bound_refinement_delta,
                           solve)
from .config import RunConfig
from .fda import DensityScan, FdaConfig, box_atom_number, crop, fda_spectrum, gaussian_width
from .mean_field import MeanFieldModel, lda_spectrum, mean_field_shift, scaled_grid
from .physics import CONST, orbital_atom_count
from .pseudopotential import PseudoPotential, ScatteringParams, build_potential
from .spectra import (FWHM_TO_SIGMA, LineList, OccupationModel, Spectrum, convolve_lineshape,
                      detuning_axis, lines_to_spectrum, multinomial_lines)
from .trap import TrapConfig, shell_decomposition, trap_averaged_spectrum, trap_fields
from .wavefunction import (RadialWavefunction, RydbergState, norm_refinement_delta,
                           outer_lobe_radius, solve_radial)


@contextmanager
def _timed(timings: dict, stage: str):
    t0 = time.perf_counter()
    try:
        yield
    finally:
        timings[stage] = timings.get(stage, 0.0) + time.perf_counter() - t0


@dataclass(eq=False)
class Prepared:
    """Everything that depends on n but not on the bath density."""

    state: RydbergState
    wf: RadialWavefunction
    pot: PseudoPotential
    r_R: float
    states: BoundStateSet
    timings: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def mean_field(self) -> MeanFieldModel:
        return MeanFieldModel.from_potential(self.pot)


def scattering_params(cfg: RunConfig) -> ScatteringParams:
    s = cfg["scattering"]
    return ScatteringParams(s["a_s0"], s["polarizability"], s["include_p_wave"], s["a_p"])


def fda_config(cfg: RunConfig) -> FdaConfig:
    f = cfg["fda"]
    return FdaConfig(window_fwhm_hz=f["window_fwhm_hz"], t_max_factor=f["t_max_factor"],
                     n_time_steps=f["n_time_steps"], form=f["form"], moment_tol=f["moment_tol"])


def trap_config(cfg: RunConfig) -> TrapConfig:
    t = cfg["trap"]
    return TrapConfig(t["peak_density"], t["tf_radius"], t["atom_number"], t["temperature"],
                      t["condensate_fraction"], t["thermal_width"])


def fixed_density(cfg: RunConfig) -> float:
    rho = cfg["fda"]["density"]
    return cfg["trap"]["peak_density"] if rho is None else rho


def prepare(n: int, cfg: RunConfig) -> Prepared:
    timings, diag = {}, {}
    r = cfg["rydberg"]
    b = cfg["box"]
    with _timed(timings, "wavefunction"):
        state = RydbergState(n, r["l"], r["quantum_defect"])
        wf = solve_radial(state)
        r_R = outer_lobe_radius(wf)
        diag["norm_refinement_delta"] = norm_refinement_delta(state)
    with _timed(timings, "potential"):
        pot = build_potential(wf, scattering_params(cfg))
    with _timed(timings, "bound_states"):
        box = BoxModel.for_radius(r_R, b["radius_factor"], n_points=b["grid_points"],
                                  l_max=b["l_max"], boundary=b["boundary"])
        states = solve(pot, box)
        if b["check_convergence"]:
            delta = bound_refinement_delta(pot, box, states)
            diag["bound_refinement_delta"] = delta
            if delta > 0.02:
                raise ConvergenceError(f"bound energies change by {delta:.1%} under grid doubling")
    diag["completeness_error"] = float(abs(states.overlaps.sum() - 1.0))
    diag["n_bound"] = states.n_bound
    diag["r_R_bohr"] = r_R
    diag["effective_n"] = state.effective_n
    return Prepared(state, wf, pot, r_R, states, timings, diag)


def orbital_atoms(prep: Prepared, density_m3: float) -> float:
    return orbital_atom_count(density_m3, prep.r_R * CONST.bohr_radius)


# --- spectra -------------------------------------------------------------------

@dataclass(eq=False)
class Result:
    spectrum: Spectrum
    diagnostics: dict
    lines: LineList | None = None
    extra: dict = field(default_factory=dict)


def fewbody(prep: Prepared, cfg: RunConfig) -> Result:
    fb = cfg["fewbody"]
    rho = fixed_density(cfg)
    st = prep.states
    idx = st.bound_index
    n_atoms = max(1, int(round(box_atom_number(rho, st.box))))
    model = OccupationModel(st.shifts_hz()[idx], st.overlaps[idx], n_atoms, fb["max_total_bound"])
    lines = multinomial_lines(model, fb["prune"])
    if lines.truncated_weight > fb["max_truncation"]:
        raise ConvergenceError(
            f"few-body enumeration misses {lines.truncated_weight:.2e} of the weight; "
            "raise max_total_bound")
    fwhm = cfg["fda"]["window_fwhm_hz"]
    step = fb["grid_step_hz"] or fwhm / 8.0
    sigma = fwhm * FWHM_TO_SIGMA
    lo = min(0.0, float(lines.positions.min())) - 12.0 * sigma
    hi = max(0.0, float(lines.positions.max())) + 12.0 * sigma
    grid = detuning_axis(lo, hi, step)
    raw = lines_to_spectrum(lines.positions, lines.weights, grid, "raw")
    spec = convolve_lineshape(raw, fwhm).normalized("unit-area")
    diag = {"n_atoms": n_atoms, "truncated_weight": lines.truncated_weight,
            "n_lines": int(lines.weights.size), "density_m3": rho}
    return Result(spec, diag, lines)


def fda(prep: Prepared, cfg: RunConfig) -> Result:
    rho = fixed_density(cfg)
    res = fda_spectrum(prep.states, rho, fda_config(cfg))
    mf = mean_field_shift(rho, prep.mean_field)
    mean, sd = res.spectrum.moments()
    diag = {"density_m3": rho, "mean_hz": mean, "sigma_hz": sd, "mean_field_hz": mf,
            "first_moment_error": abs(mean / mf - 1.0) if mf else 0.0,
            "area": res.spectrum.area(), "cutoff_hz": res.grid.cutoff_hz,
            "frozen_moment_fraction": res.frozen_moment_fraction,
            "n_fft": res.grid.n_fft}
    return Result(res.spectrum, diag, extra={"overlap": res.overlap})


def meanfield(prep: Prepared, cfg: RunConfig, n_bins: int = 2000) -> Result:
    tc = trap_config(cfg)
    model = prep.mean_field
    dmax = mean_field_shift(tc.peak_density, model)
    if dmax == 0:
        raise ConvergenceError("mean-field shift vanishes; no axis to scale")
    grid = scaled_grid(dmax, n_bins)
    tf = trap_fields(tc, thermal=False)[0]
    spec = lda_spectrum(tf, model, grid)
    return Result(spec, {"delta_max_hz": dmax, "v_integral_au": model.v_integral})


def trap(prep: Prepared, cfg: RunConfig, workers: int = 1) -> Result:
    tc = trap_config(cfg)
    t = cfg["trap"]
    fields = trap_fields(tc, thermal=t["thermal"])
    shells = shell_decomposition(fields, t["n_shells"], t["n_outer"])
    scan = DensityScan(prep.states, float(np.max(shells.node_densities)), fda_config(cfg))
    spec = crop(trap_averaged_spectrum(shells, scan, workers=workers)).normalized("unit-area")
    dmax = mean_field_shift(tc.peak_density, prep.mean_field)
    diag = {"n_shells": len(shells), "shell_atoms": shells.total,
            "field_atoms": float(sum(f.total for f in fields)),
            "nominal_atoms": tc.atom_number, "delta_max_hz": dmax,
            "frozen_moment_fraction": scan.frozen_moment_fraction}
    return Result(spec, diag, extra={"shells": shells})


MODES = {"fewbody": fewbody, "fda": fda, "meanfield": meanfield, "trap": trap}


# --- width sweep -----------------------------------------------------------------

@dataclass(frozen=True)
class WidthRow:
    n: int
    effective_n: float
    delta_hz: float
    sigma_hz: float


def width_row(prep: Prepared, cfg: RunConfig) -> WidthRow:
    """Gaussian width of the fixed-density spectrum with the window removed."""
    rho = fixed_density(cfg)
    fc = fda_config(cfg)
    res = fda_spectrum(prep.states, rho, fc)
    fit = gaussian_width(res.spectrum)
    sw = fc.window_fwhm_hz * FWHM_TO_SIGMA
    sigma = math.sqrt(max(fit.sigma ** 2 - sw ** 2, 0.0))
    return WidthRow(prep.state.n, prep.state.effective_n,
                    mean_field_shift(rho, prep.mean_field), sigma)
