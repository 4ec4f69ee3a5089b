"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run on its own with ``python3 tests/test_acceptance.py`` or
``pytest -s tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from helpers import density_for_atoms, synthetic_states
from oracles import poisson_comb
from rydpolaron import pipeline
from rydpolaron.bound_states import bound_energies, solve
from rydpolaron.config import defaults
from rydpolaron.fda import DensityScan, FdaConfig, fda_spectrum, gaussian_width, power_law_exponent
from rydpolaron.mean_field import (lda_spectrum, mean_field_shift, scaled_grid,
                                   tf_closed_form_binned)
from rydpolaron.physics import nearest_neighbor_distance
from rydpolaron.spectra import (FWHM_TO_SIGMA, OccupationModel, Spectrum, binomial_lines,
                                binomial_spectrum, detuning_axis, kolmogorov_to_normal,
                                l1_distance, multinomial_lines)
from rydpolaron.trap import TrapConfig, central_shell_stats, thomas_fermi_profile
from rydpolaron.wavefunction import RydbergState, norm_refinement_delta

from conftest import RHO_MAX, prepared

CFG = FdaConfig()
SIGMA_W = CFG.window_fwhm_hz * FWHM_TO_SIGMA


@pytest.fixture
def report(capsys):
    """report(label, checks) prints one line and fails the test if any check fails."""
    t0 = time.perf_counter()

    def _report(label, checks):
        ok = all(passed for passed, _ in checks)
        detail = "; ".join(text for _, text in checks)
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label} ({time.perf_counter() - t0:.1f} s): {detail}")
        assert ok, detail

    return _report


def test_criterion_01_orbital_atom_count(report):
    expected = {49: 13, 60: 50, 72: 160}
    checks = []
    for n, ref in expected.items():
        got = pipeline.orbital_atoms(prepared(n), RHO_MAX)
        checks.append((abs(got / ref - 1) <= 0.2, f"n={n}: {got:.1f} vs {ref}"))
    report("1 orbital atom count", checks)


def test_criterion_02_nearest_neighbor(report):
    d = nearest_neighbor_distance(RHO_MAX) * 1e9
    report("2 nearest-neighbour distance", [(76 <= d <= 82, f"{d:.2f} nm")])


def test_criterion_03_central_shell(report):
    s = central_shell_stats(TrapConfig())
    report("3 central-shell statistics",
           [(abs(s.mean_density / 3.6e20 - 0.92) < 1e-6, f"<rho>/rho_max {s.mean_density / 3.6e20:.4f}"),
            (abs(s.relative_std - 0.04) <= 0.005, f"relative std {s.relative_std:.4f}")])


def test_criterion_04_width_scaling(report):
    rows = [pipeline.width_row(prepared(n), defaults()) for n in (49, 60, 72)]
    k = power_law_exponent([r.effective_n for r in rows], [r.sigma_hz for r in rows])
    scan = DensityScan(prepared(49).states, RHO_MAX, CFG)
    sig = [math.sqrt(gaussian_width(scan(rho)).sigma ** 2 - SIGMA_W ** 2)
           for rho in (RHO_MAX, RHO_MAX / 4)]
    ratio = sig[0] / sig[1]
    report("4 width scaling",
           [(abs(k + 3) <= 0.3, f"exponent {k:.3f}"),
            (abs(ratio / 2 - 1) <= 0.05, f"sigma(rho)/sigma(rho/4) {ratio:.4f}")])


def test_criterion_05_moment_identities(report):
    checks = []
    for n in (49, 60, 72):
        prep = prepared(n)
        for rho in (RHO_MAX, RHO_MAX / 4):
            spec = fda_spectrum(prep.states, rho, CFG).spectrum
            mf = mean_field_shift(rho, prep.mean_field)
            area, mean = spec.area(), spec.moments()[0]
            checks.append((abs(area - 1) <= 5e-3, f"n={n} rho/{RHO_MAX / rho:.0f} area {area:.5f}"))
            checks.append((abs(mean / mf - 1) <= 0.01, f"mean/Delta {mean / mf:.4f}"))
    report("5 moment identities", checks)


def test_criterion_06_binomial_gaussian_limit(report):
    N, p, eps = 160, 0.08, -1e6
    grid = detuning_axis(N * eps * 1.01, 1e6, 0.05e6)
    mean, sd = binomial_spectrum(N, p, eps, grid).moments()
    mu, var = N * p * eps, N * p * (1 - p) * eps ** 2
    pos, w = binomial_lines(2000, 0.08, eps)
    ks = kolmogorov_to_normal(pos, w)
    report("6 binomial and Gaussian limit",
           [(abs(mean / mu - 1) <= 1e-12, f"mean rel err {abs(mean / mu - 1):.1e}"),
            (abs(sd ** 2 / var - 1) <= 1e-12, f"variance rel err {abs(sd ** 2 / var - 1):.1e}"),
            (ks < 0.05, f"Kolmogorov distance at N p0 = 160: {ks:.4f}")])


def test_criterion_07_poisson_limit(report):
    checks = []
    for lam, eps in ((3.0, -2e6), (12.0, -1e6)):
        p0 = 0.01
        st = synthetic_states([eps, 0.0], [p0, 1 - p0])
        spec = fda_spectrum(st, density_for_atoms(lam / p0, st.box), CFG).spectrum
        ref = Spectrum(spec.detunings, poisson_comb(lam, eps, spec.detunings, SIGMA_W), "raw")
        d = l1_distance(spec, ref)
        checks.append((d < 0.01, f"lambda={lam:g}: L1 {d:.1e}"))
    report("7 Poisson limit", checks)


def test_criterion_08_lda_closed_form(report):
    model = prepared(49).mean_field
    dmax = mean_field_shift(RHO_MAX, model)
    grid = scaled_grid(dmax, 2000)
    spec = lda_spectrum(thomas_fermi_profile(TrapConfig()), model, grid)
    d = l1_distance(spec, Spectrum(grid, tf_closed_form_binned(grid, dmax)))
    peak = grid[np.argmax(spec.intensities)] / dmax
    report("8 LDA closed form",
           [(d < 1e-3, f"L1 {d:.1e}"), (abs(peak / (2 / 3) - 1) <= 0.01, f"peak at {peak:.4f} Delta_max")])


def test_criterion_09_few_body_structure(report):
    prep = prepared(38)
    res = pipeline.fewbody(prep, defaults())
    labels = res.lines.labels()
    pos = dict(zip(labels, res.lines.positions))
    dimers = [lab for lab in labels if lab.startswith("D")]
    checks = [(prep.states.n_bound >= 2, f"{prep.states.n_bound} dimer levels"),
              (res.lines.truncated_weight < 1e-6, f"truncated {res.lines.truncated_weight:.1e}")]
    exact = all(pos[f"Tr{d[1:] * 2}"] == 2 * pos[d] for d in dimers if f"Tr{d[1:] * 2}" in pos)
    n_tr = sum(f"Tr{d[1:] * 2}" in pos for d in dimers)
    checks.append((exact and n_tr >= 2, f"{n_tr} D+D trimers at exactly twice the dimer shift"))
    ladder = [p for p in ("D", "Tr", "Te", "P") if any(lab.startswith(p) and lab[len(p)].isdigit()
                                                     for lab in labels)]
    checks.append((len(ladder) == 4, f"ladder {'/'.join(ladder)}"))
    report("9 few-body structure", checks)


def test_criterion_10_convergence(report):
    prep = prepared(49)
    base = fda_spectrum(prep.states, RHO_MAX, CFG).spectrum
    fp = fda_spectrum(prep.states, RHO_MAX, FdaConfig(form="finite_power")).spectrum
    big = solve(prep.pot, prep.states.box.scaled(1.5))
    e0, e1 = bound_energies(prep.states), bound_energies(big)
    de = float(np.max(np.abs(e1 / e0 - 1))) if e0.size == e1.size else math.inf
    ds = l1_distance(base, fda_spectrum(big, RHO_MAX, CFG).spectrum)
    dn = max(norm_refinement_delta(RydbergState(n)) for n in (38, 49, 60, 72))
    report("10 convergence and self-consistency",
           [(l1_distance(base, fp) < 0.02, f"exp vs finite power L1 {l1_distance(base, fp):.4f}"),
            (de < 0.01, f"box x1.5 bound energies {de:.1e}"),
            (ds < 0.02, f"box x1.5 spectrum L1 {ds:.1e}"),
            (dn < 1e-7, f"grid doubling norm {dn:.1e}")])


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
