import functools

import numpy as np
import pytest

from oracles import contact_shift_hz
from rydpolaron.mean_field import (MeanFieldModel, density_weighted_shift, lda_spectrum,
                                   mean_field_line, mean_field_shift, scaled_grid,
                                   tf_closed_form, tf_closed_form_binned)
from rydpolaron.pseudopotential import ScatteringParams, build_potential
from rydpolaron.spectra import Spectrum, SpectrumError, detuning_axis, l1_distance
from rydpolaron.trap import TrapConfig, thomas_fermi_profile, uniform_profile
from rydpolaron.wavefunction import RydbergState, solve_radial

from conftest import RHO_MAX

TF = thomas_fermi_profile(TrapConfig())


@functools.lru_cache(maxsize=None)
def model(n, params=ScatteringParams()):
    return MeanFieldModel.from_potential(build_potential(solve_radial(RydbergState(n)), params))


def test_zero_density():
    assert mean_field_shift(0.0, model(49)) == 0.0


def test_linear_in_density():
    m = model(49)
    assert mean_field_shift(2 * RHO_MAX, m) == 2 * mean_field_shift(RHO_MAX, m)
    assert np.allclose(mean_field_shift(np.array([1.0, 2.0]) * RHO_MAX, m),
                       [mean_field_shift(RHO_MAX, m), 2 * mean_field_shift(RHO_MAX, m)])


def test_negative_density_rejected():
    with pytest.raises(ValueError):
        mean_field_shift(-1.0, model(49))


def test_contact_shift_value():
    m = model(49, ScatteringParams(polarizability=0.0))
    shift = mean_field_shift(RHO_MAX, m)
    assert m.v_integral < 0
    assert shift == pytest.approx(contact_shift_hz(RHO_MAX, -13.2), rel=1e-8)
    assert shift == pytest.approx(-29e6, rel=0.03)


def test_shift_varies_slightly_with_n():
    d = [mean_field_shift(RHO_MAX, model(n)) for n in (49, 60, 72)]
    assert all(x < 0 for x in d)
    assert max(d) / min(d) > 0.8


def _tf_setup(n=49, n_bins=2000):
    m = model(n)
    dmax = mean_field_shift(RHO_MAX, m)
    grid = scaled_grid(dmax, n_bins)
    return m, dmax, grid, lda_spectrum(TF, m, grid)


def test_tf_lda_matches_closed_form():
    _, dmax, grid, spec = _tf_setup()
    ref = Spectrum(grid, tf_closed_form_binned(grid, dmax), "unit-area")
    assert l1_distance(spec, ref) < 1e-3


def test_tf_lda_matches_pointwise_closed_form():
    # without the binning kernel, accurate away from the square-root edge
    _, dmax, grid, spec = _tf_setup()
    ref = Spectrum(grid, tf_closed_form(grid, dmax), "raw")
    assert l1_distance(spec, ref) < 1e-2


def test_tf_closed_form_peak_and_area():
    y = np.linspace(0, 1, 300001)
    a = tf_closed_form(y * -1.0, -1.0)
    assert y[np.argmax(a)] == pytest.approx(2 / 3, abs=1e-5)
    assert np.trapezoid(a, y) == pytest.approx(1.0, rel=1e-6)


def test_tf_lda_peak_two_thirds():
    _, dmax, grid, spec = _tf_setup()
    assert grid[np.argmax(spec.intensities)] / dmax == pytest.approx(2 / 3, rel=0.01)


def test_tf_support_exactly_zero_to_max():
    _, dmax, grid, spec = _tf_setup()
    y = grid / dmax
    step = abs(grid[1] - grid[0])
    outside = (y < -step / abs(dmax)) | (y > 1 + step / abs(dmax))
    assert np.sum(spec.intensities[outside]) * spec.step < 1e-6


def test_first_moment_two_ways():
    m, _, _, spec = _tf_setup()
    assert spec.moments()[0] == pytest.approx(density_weighted_shift(TF, m), rel=1e-6)


def test_uniform_sphere_single_line():
    m = model(49)
    d = mean_field_shift(RHO_MAX, m)
    grid = scaled_grid(d, 400)
    spec = lda_spectrum(uniform_profile(RHO_MAX, 1e-6), m, grid)
    line = mean_field_line(RHO_MAX, m, grid)
    assert np.allclose(spec.intensities, line.intensities, rtol=1e-9, atol=0)
    assert spec.moments()[0] == pytest.approx(d, rel=1e-12)


def _on_scaled_axis(spec, dmax):
    x, a = spec.scaled_axis(dmax)
    order = np.argsort(x)
    return Spectrum(x[order], a[order])


def test_scaled_axis_universality():
    scaled = [_on_scaled_axis(s, d) for _, d, _, s in (_tf_setup(n) for n in (49, 60, 72))]
    for other in scaled[1:]:
        assert l1_distance(scaled[0], other) < 1e-9


def test_grid_must_cover_support():
    m, dmax, _, _ = _tf_setup()
    short = detuning_axis(0.5 * dmax, 0.0, abs(dmax) / 100)
    with pytest.raises(SpectrumError, match="cover"):
        lda_spectrum(TF, m, short)


def test_attractive_contact_must_integrate_negative(monkeypatch):
    import rydpolaron.mean_field as mf
    pot = build_potential(solve_radial(RydbergState(49)), ScatteringParams(polarizability=0.0))
    monkeypatch.setattr(mf, "integrated_potential", lambda p: 1.0)
    with pytest.raises(ValueError):
        MeanFieldModel.from_potential(pot)
