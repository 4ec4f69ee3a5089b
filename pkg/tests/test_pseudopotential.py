import math

import numpy as np
import pytest

from rydpolaron.bound_states import HARTREE_HZ
from rydpolaron.physics import RadialGrid
from rydpolaron.pseudopotential import (ScatteringParams, build_potential, contact_integral,
                                        integrated_potential, s_wave_scattering_length,
                                        write_potential)
from rydpolaron.wavefunction import (RydbergState, default_grid, outer_lobe_radius,
                                     semiclassical_momentum, solve_radial)

NO_ALPHA = ScatteringParams(a_s0=-13.2, polarizability=0.0)


@pytest.fixture(scope="module")
def wf49():
    return solve_radial(RydbergState(49))


@pytest.fixture(scope="module")
def wf38():
    return solve_radial(RydbergState(38))


def test_scattering_length_expansion():
    p = ScatteringParams()
    assert s_wave_scattering_length(0.0, p) == p.a_s0
    assert s_wave_scattering_length(0.02, p) == pytest.approx(-9.30, abs=5e-3)
    assert s_wave_scattering_length(0.3, NO_ALPHA) == -13.2
    with pytest.raises(ValueError):
        s_wave_scattering_length(-0.1, p)


def test_contact_integral_forced_by_normalization(wf49):
    pot = build_potential(wf49, NO_ALPHA)
    assert integrated_potential(pot) == pytest.approx(contact_integral(-13.2), rel=1e-9)


def test_zero_scattering_gives_zero_potential(wf49):
    pot = build_potential(wf49, ScatteringParams(0.0, 0.0))
    assert np.all(pot.v == 0)


def test_linear_in_scattering_length(wf49):
    a = build_potential(wf49, ScatteringParams(-13.2, 0.0))
    b = build_potential(wf49, ScatteringParams(-26.4, 0.0))
    assert np.allclose(b.v, 2 * a.v, rtol=1e-14, atol=0)
    assert integrated_potential(b) == pytest.approx(2 * integrated_potential(a), rel=1e-13)


def test_momentum_dependence_within_quarter_of_contact_value(wf49):
    full = integrated_potential(build_potential(wf49, ScatteringParams()))
    contact = integrated_potential(build_potential(wf49, NO_ALPHA))
    assert 0.75 < full / contact < 1.0


def test_integral_stable_under_grid_refinement():
    st = RydbergState(49)
    g = default_grid(st)
    coarse = integrated_potential(build_potential(solve_radial(st, g), ScatteringParams()))
    fine = integrated_potential(build_potential(solve_radial(st, g.refined()), ScatteringParams()))
    assert abs(fine / coarse - 1) < 1e-4


def test_outer_well_depth_pointwise(wf38):
    # 2 pi A_s(k(r_R)) |Psi(r_R)|^2 evaluated by hand at the outer lobe
    pot = build_potential(wf38, ScatteringParams())
    rR = outer_lobe_radius(wf38)
    i = np.argmin(np.abs(wf38.r - rR))
    r = wf38.r[i]
    k = math.sqrt(max(2 * (wf38.state.energy + 1 / r), 0.0))
    a = -13.2 + math.pi / 3 * 186 * k
    hand = 2 * math.pi * a * wf38.u[i] ** 2 / (4 * math.pi * r ** 2)
    assert pot.v[i] == pytest.approx(hand, rel=1e-12)
    assert pot.v[i] < 0
    assert pot.v[i] * HARTREE_HZ == pytest.approx(-14.6e6, rel=0.05)


def _tail_hz(n, factor):
    wf = solve_radial(RydbergState(n))
    pot = build_potential(wf, ScatteringParams())
    far = wf.r > factor * wf.state.effective_n ** 2
    return float(np.max(np.abs(pot.v[far])) * HARTREE_HZ)


@pytest.mark.parametrize("n", [38, 49, 60, 72])
def test_attractive_at_outer_lobe(n):
    wf = solve_radial(RydbergState(n))
    assert build_potential(wf, ScatteringParams())(outer_lobe_radius(wf)) < 0


@pytest.mark.parametrize("n", [49, 60, 72, 90])
def test_tail_below_one_hz(n):
    assert _tail_hz(n, 2.5) < 1.0


def test_tail_below_one_hz_n38_slightly_further_out():
    assert _tail_hz(38, 2.7) < 1.0


@pytest.mark.xfail(strict=True, reason="at n=38 the evanescent tail still carries about 30 Hz "
                   "at 2.5 n*^2; the 1 Hz level is reached near 2.6 n*^2")
def test_tail_below_one_hz_n38():
    assert _tail_hz(38, 2.5) < 1.0


def test_sign_follows_scattering_length(wf49):
    pot = build_potential(wf49, ScatteringParams())
    a = s_wave_scattering_length(semiclassical_momentum(wf49.r, wf49.state), pot.params)
    nz = wf49.density() > 0
    assert np.all(np.sign(pot.v[nz]) == np.sign(a[nz]))


def test_scattering_length_sign_change_radius(wf49):
    # A_s = 0 at k0 = 13.2 / (pi/3 * 186); k0^2 / 2 = E + 1/r fixes the radius
    p = ScatteringParams()
    k0 = 13.2 / (math.pi / 3 * 186)
    r_hand = 1.0 / (k0 ** 2 / 2 - wf49.state.energy)
    r = np.linspace(300, 600, 30001)
    a = s_wave_scattering_length(semiclassical_momentum(r, wf49.state), p)
    r0 = r[np.nonzero(np.diff(np.sign(a)))[0][0]]
    assert r0 == pytest.approx(r_hand, abs=0.02)
    assert r0 == pytest.approx(394, abs=2)


def _outer_well_minimum(wf, pot):
    # last local minimum of V before the tail
    v = pot.v
    idx = np.nonzero((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:]) & (v[1:-1] < 0))[0] + 1
    return wf.r[idx[-1]]


@pytest.mark.parametrize("n", [38, 49, 60, 72])
def test_outermost_well_sits_at_outer_lobe(n):
    wf = solve_radial(RydbergState(n))
    pot = build_potential(wf, ScatteringParams())
    assert _outer_well_minimum(wf, pot) == pytest.approx(outer_lobe_radius(wf), rel=0.05)


def test_global_minimum_at_outer_lobe_n38(wf38):
    pot = build_potential(wf38, ScatteringParams())
    assert wf38.r[np.argmin(pot.v)] == pytest.approx(outer_lobe_radius(wf38), rel=0.05)


@pytest.mark.xfail(strict=True, reason="with A_s(k) the deepest point for n >= 49 lies in an "
                   "inner well where k is small enough for A_s < 0 and |Psi|^2 is large")
def test_global_minimum_at_outer_lobe_n49(wf49):
    pot = build_potential(wf49, ScatteringParams())
    assert wf49.r[np.argmin(pot.v)] == pytest.approx(outer_lobe_radius(wf49), rel=0.05)


def test_grid_mismatch_rejected(wf49):
    with pytest.raises(ValueError):
        build_potential(wf49, ScatteringParams(), RadialGrid.geometric(2.0, 1e4, 11))


def test_p_wave_flag_with_zero_length_is_inert(wf49):
    a = build_potential(wf49, ScatteringParams())
    b = build_potential(wf49, ScatteringParams(include_p_wave=True, a_p=0.0))
    assert np.array_equal(a.v, b.v)


def test_p_wave_term_is_repulsive_addition(wf49):
    a = build_potential(wf49, ScatteringParams())
    b = build_potential(wf49, ScatteringParams(include_p_wave=True, a_p=5.0))
    assert np.all(b.v >= a.v)


def test_potential_export(tmp_path, wf38):
    pot = build_potential(wf38, ScatteringParams())
    path = tmp_path / "v.txt"
    write_potential(pot, path)
    data = np.loadtxt(path)
    assert data.shape == (len(pot.r), 2)
    assert np.allclose(data[:, 1], pot.v * HARTREE_HZ / 1e6, rtol=1e-9)
