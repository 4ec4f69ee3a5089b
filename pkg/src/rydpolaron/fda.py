"""Time-domain many-body spectrum at fixed density.

A single bath atom starting in the condensate mode ``|s>`` has the overlap

    s(t) = <s| exp(i h0 t) exp(-i h t) |s> = sum_b p_b exp(-2 pi i f_b t),

with ``f_b = (eps_b - eps_s0) / h``. For a T = 0 condensate of ``N_box``
independent atoms the overlap is ``s(t)**N_box``; in the thermodynamic
limit this becomes ``exp(N_box (s(t) - 1))``. The absorption spectrum is

    A(nu) = 2 Re int_0^inf exp(2 pi i nu t) S(t) w(t) dt,

where ``w`` is a Gaussian window equivalent to the laser lineshape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .bound_states import BoundStateSet, BoxModel, ConvergenceError
from .physics import CONST
from .spectra import FWHM_TO_SIGMA, Spectrum, SpectrumError

FORMS = ("exponentiated", "finite_power")


@dataclass(frozen=True)
class FdaConfig:
    """Time grid and window settings.

    ``t_max`` fixes the frequency resolution ``1/t_max``; ``n_time_steps``
    is a floor on the FFT length, raised automatically until the Nyquist
    band holds every line except those carrying less than
    ``moment_tol`` of the first moment.
    """

    window_fwhm_hz: float = 400e3
    t_max_factor: float = 20.0
    n_time_steps: int = 2 ** 14
    form: str = "exponentiated"
    moment_tol: float = 2e-3
    max_nyquist_hz: float = 60e9

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown form {self.form!r}")
        if self.window_fwhm_hz <= 0 or self.t_max_factor <= 0 or self.n_time_steps < 2:
            raise ValueError("invalid time-grid settings")

    @property
    def t_max(self) -> float:
        return self.t_max_factor / self.window_fwhm_hz

    @property
    def window_tau(self) -> float:
        """Time constant of w(t) = exp(-t^2 / 2 tau^2)."""
        return 1.0 / (2.0 * math.pi * self.window_fwhm_hz * FWHM_TO_SIGMA)

    def window(self, t: np.ndarray) -> np.ndarray:
        return np.exp(-0.5 * (t / self.window_tau) ** 2)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    dt: float
    n_samples: int  # samples where the window is non-negligible
    n_fft: int
    cutoff_hz: float

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_samples)


@dataclass(frozen=True, eq=False)
class OverlapSeries:
    times: np.ndarray
    values: np.ndarray
    density: float  # m^-3
    box: BoxModel
    n_fft: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if abs(self.values[0] - 1.0) > 1e-12:
            raise ValueError("S(0) must equal 1")
        if np.max(np.abs(self.values)) > 1.0 + 1e-9:
            raise ValueError("|S(t)| exceeds 1")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def density_au(density_m3: float) -> float:
    return density_m3 * CONST.bohr_radius ** 3


def box_atom_number(density_m3: float, box: BoxModel) -> float:
    return density_au(density_m3) * box.volume


def far_cutoff(states: BoundStateSet, moment_tol: float) -> float:
    """Smallest |f| beyond which the lines hold < moment_tol of sum p f."""
    f = states.shifts_hz()
    pf = states.overlaps * f
    total = abs(pf.sum())
    order = np.argsort(np.abs(f))[::-1]
    outside = np.cumsum(np.abs(pf[order]))
    k = np.searchsorted(outside, moment_tol * total)
    # lines order[:k] may be dropped; the cutoff sits just above the largest kept one
    return float(abs(f[order[k]])) * (1.0 + 1e-9) if k < f.size else 0.0


def plan_time_grid(states: BoundStateSet, density_m3: float, cfg: FdaConfig) -> TimeGrid:
    cutoff = far_cutoff(states, cfg.moment_tol)
    f = states.shifts_hz()
    lam = box_atom_number(density_m3, states.box) * states.overlaps
    kept = np.abs(f) <= cutoff
    mean = abs(np.sum(lam[kept] * f[kept]))
    sd = math.sqrt(np.sum(lam[kept] * f[kept] ** 2))
    sigma_w = cfg.window_fwhm_hz * FWHM_TO_SIGMA
    nyquist = cutoff + mean + 8.0 * sd + 10.0 * sigma_w
    if nyquist > cfg.max_nyquist_hz:
        raise ConvergenceError(
            f"spectral support {nyquist:.3g} Hz exceeds max_nyquist_hz; "
            "raise moment_tol or max_nyquist_hz")
    t_cut = cfg.window_tau * math.sqrt(2.0 * math.log(1e17))
    if cfg.t_max < t_cut:
        raise SpectrumError(
            f"t_max = {cfg.t_max:.3g} s leaves the windowed overlap undecayed "
            f"(needs >= {t_cut:.3g} s)")
    dt = 1.0 / (2.0 * nyquist)
    n_fft = max(cfg.n_time_steps, 1 << math.ceil(math.log2(cfg.t_max / dt)))
    dt = cfg.t_max / n_fft
    n_samples = min(n_fft, int(math.ceil(t_cut / dt)) + 1)
    return TimeGrid(dt, n_samples, n_fft, cutoff)


def single_atom_overlap(states: BoundStateSet, times: np.ndarray,
                        cutoff_hz: float | None = None) -> np.ndarray:
    """s(t) for the condensate atom; lines beyond ``cutoff_hz`` are frozen.

    Frozen lines keep their weight at zero shift so that s(0) = 1 and
    |s| <= 1 hold exactly; their share of the mean is what the cutoff was
    chosen to bound.
    """
    if states.overlaps is None:
        raise ValueError("overlaps missing; run condensate_overlaps first")
    f = states.shifts_hz()
    p = states.overlaps / states.overlaps.sum()
    keep = p > 0
    if cutoff_hz is not None:
        keep &= np.abs(f) <= cutoff_hz
    frozen = float(p[~keep].sum())
    times = np.asarray(times, dtype=float)
    return _phase_sum(f[keep], p[keep], times) + frozen


def _phase_sum(f: np.ndarray, p: np.ndarray, times: np.ndarray) -> np.ndarray:
    """sum_b p_b exp(-2 pi i f_b t) for every t.

    Uniform grids starting at 0 are split into blocks, t = t_B + t_k, so the
    sum becomes one complex matrix product; every phase is still evaluated
    directly rather than by repeated multiplication.
    """
    n = times.size
    dt = times[1] - times[0] if n > 1 else 0.0
    uniform = n > 2 and times[0] == 0.0 and np.allclose(times, dt * np.arange(n), rtol=1e-12, atol=0)
    if not uniform:
        out = np.empty(n, dtype=complex)
        for lo in range(0, n, 4096):
            out[lo:lo + 4096] = np.exp(-2j * math.pi * np.outer(times[lo:lo + 4096], f)) @ p
        return out
    block = max(1, int(math.sqrt(n)))
    n_blocks = -(-n // block)
    inner = np.exp(-2j * math.pi * np.outer(dt * np.arange(block), f))
    outer = p[:, None] * np.exp(-2j * math.pi * np.outer(f, dt * block * np.arange(n_blocks)))
    return (inner @ outer).T.reshape(-1)[:n]


def condensate_overlap(s_t: np.ndarray, times: np.ndarray, density_m3: float,
                       box: BoxModel, form: str = "exponentiated",
                       n_fft: int | None = None, min_atoms: float = 1.0) -> OverlapSeries:
    """S(t) for the condensate; ``min_atoms`` guards against undersized boxes.

    The exponentiated form is linear in rho V_box, so callers averaging over
    dilute regions may lower ``min_atoms`` for it.
    """
    if form not in FORMS:
        raise ValueError(f"unknown form {form!r}")
    n_box = box_atom_number(density_m3, box)
    if density_m3 > 0 and n_box < min_atoms:
        raise ValueError(f"box holds only {n_box:.3g} atoms at this density")
    if form == "exponentiated":
        S = np.exp(n_box * (s_t - 1.0))
    else:
        logs = np.log(np.abs(s_t)) + 1j * np.unwrap(np.angle(s_t))
        S = np.exp(n_box * logs)
    # guard against rounding in |S| right at t = 0
    S[0] = 1.0
    return OverlapSeries(np.asarray(times), S, density_m3, box,
                         n_fft or len(times), {"n_box": n_box})


def spectrum_from_overlap(S: OverlapSeries, cfg: FdaConfig,
                          crop_tol: float | None = 1e-10) -> Spectrum:
    """Fourier-invert the windowed overlap to a unit-area spectrum."""
    t = S.times
    w = cfg.window(t)
    if abs(S.values[-1] * w[-1]) > 1e-4 and t.size >= S.n_fft:
        raise SpectrumError("windowed overlap has not decayed by t_max")
    x = np.zeros(S.n_fft, dtype=complex)
    x[:t.size] = S.values * w
    x[0] *= 0.5
    a = 2.0 * np.real(np.fft.ifft(x)) * S.n_fft * S.dt
    nu = np.fft.fftfreq(S.n_fft, d=S.dt)
    a, nu = np.fft.fftshift(a), np.fft.fftshift(nu)
    peak = a.max()
    if a.min() < -1e-3 * peak:
        raise SpectrumError(f"truncation ringing {a.min() / peak:.2e} of peak")
    a = np.clip(a, 0.0, None)
    if crop_tol is None:
        return Spectrum(nu, a, "raw").normalized("unit-area")
    return crop(Spectrum(nu, a, "raw"), crop_tol).normalized("unit-area")


def crop(spec: Spectrum, tol: float = 1e-10) -> Spectrum:
    """Drop the outer grid points holding less than ``tol`` of the weight per side."""
    a, nu = spec.intensities, spec.detunings
    cdf = np.cumsum(a)
    cdf /= cdf[-1]
    lo = max(0, np.searchsorted(cdf, tol) - 1)
    hi = min(a.size - 1, np.searchsorted(cdf, 1.0 - tol) + 1)
    return Spectrum(nu[lo:hi + 1], a[lo:hi + 1], spec.normalization)


@dataclass(frozen=True)
class FdaResult:
    spectrum: Spectrum
    overlap: OverlapSeries
    grid: TimeGrid
    mean_field_hz: float
    frozen_moment_fraction: float


def _frozen_fraction(states: BoundStateSet, cutoff_hz: float) -> float:
    f = states.shifts_hz()
    pf = states.overlaps * f
    return float(pf[np.abs(f) > cutoff_hz].sum() / pf.sum())


def fda_spectrum(states: BoundStateSet, density_m3: float,
                 cfg: FdaConfig = FdaConfig()) -> FdaResult:
    """Full pipeline: time grid, s(t), S(t), A(nu)."""
    grid = plan_time_grid(states, density_m3, cfg)
    times = grid.times
    s_t = single_atom_overlap(states, times, grid.cutoff_hz)
    S = condensate_overlap(s_t, times, density_m3, states.box, cfg.form, grid.n_fft)
    spec = spectrum_from_overlap(S, cfg)
    frozen = _frozen_fraction(states, grid.cutoff_hz)
    mean = box_atom_number(density_m3, states.box) * float(np.sum(states.overlaps * states.shifts_hz()))
    S.meta.update(cutoff_hz=grid.cutoff_hz, frozen_moment_fraction=frozen)
    return FdaResult(spec, S, grid, mean, frozen)


class DensityScan:
    """Fixed-density spectra for many densities sharing one s(t).

    The time grid is planned at ``max_density``, whose spectrum is the
    widest, so every spectrum lands on the same (uncropped) frequency axis
    and can be summed without interpolation.
    """

    def __init__(self, states: BoundStateSet, max_density: float,
                 cfg: FdaConfig = FdaConfig(), min_atoms: float = 0.0):
        self.states, self.cfg, self.min_atoms = states, cfg, min_atoms
        self.grid = plan_time_grid(states, max_density, cfg)
        self.times = self.grid.times
        self.s_t = single_atom_overlap(states, self.times, self.grid.cutoff_hz)
        self.frozen_moment_fraction = _frozen_fraction(states, self.grid.cutoff_hz)

    def overlap(self, density_m3: float) -> OverlapSeries:
        return condensate_overlap(self.s_t, self.times, density_m3, self.states.box,
                                  self.cfg.form, self.grid.n_fft, self.min_atoms)

    def __call__(self, density_m3: float) -> Spectrum:
        return spectrum_from_overlap(self.overlap(density_m3), self.cfg, crop_tol=None)


# --- width analysis ----------------------------------------------------------

def _gauss(x, amp, center, sigma):
    return amp * np.exp(-0.5 * ((x - center) / sigma) ** 2)


@dataclass(frozen=True)
class GaussianFit:
    center: float
    sigma: float
    amplitude: float
    residual: float  # rms residual / peak inside the fit window


def gaussian_width(spec: Spectrum, fit_window: tuple[float, float] | None = None,
                   max_residual: float = 0.2) -> GaussianFit:
    """Least-squares Gaussian fit of the dominant envelope.

    The default window spans the 0.1% to 99.9% quantiles of the spectrum.
    """
    nu, a = spec.detunings, spec.intensities
    if fit_window is None:
        cdf = np.cumsum(a)
        cdf /= cdf[-1]
        fit_window = (nu[np.searchsorted(cdf, 1e-3)], nu[np.searchsorted(cdf, 1 - 1e-3)])
    m = (nu >= fit_window[0]) & (nu <= fit_window[1])
    x, y = nu[m], a[m]
    if x.size < 5:
        raise SpectrumError("fit window holds fewer than five points")
    w = y / y.sum()
    c0 = float(np.sum(w * x))
    s0 = float(math.sqrt(np.sum(w * (x - c0) ** 2)))
    scale = s0 if s0 > 0 else spec.step
    popt, _ = curve_fit(lambda u, A, c, s: _gauss(u, A, c, s),
                        (x - c0) / scale, y, p0=[y.max(), 0.0, 1.0], maxfev=20000)
    amp, c, s = popt
    center, sigma = c0 + c * scale, abs(s) * scale
    resid = y - _gauss(x, amp, center, sigma)
    rel = float(math.sqrt(np.mean(resid ** 2)) / y.max())
    if rel > max_residual:
        raise SpectrumError(f"Gaussian fit residual {rel:.1%} of peak")
    return GaussianFit(center, sigma, float(amp), rel)


def power_law_exponent(x, y) -> float:
    """Least-squares slope of log y against log x."""
    slope, _ = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope)
