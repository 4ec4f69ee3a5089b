"""Occupation-number line spectra and the :class:`Spectrum` container.

All detunings are in Hz, negative to the red. Line positions are binned
onto uniform axes with a two-bin linear split, which conserves weight and
first moment exactly.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal
from scipy.special import gammaln, ndtr

NORMALIZATIONS = ("unit-area", "peak-unit", "raw")


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    detunings: np.ndarray
    intensities: np.ndarray
    normalization: str = "unit-area"

    def __post_init__(self):
        nu = np.asarray(self.detunings, dtype=float)
        a = np.asarray(self.intensities, dtype=float)
        if nu.shape != a.shape or nu.ndim != 1 or nu.size < 2:
            raise SpectrumError("detunings and intensities must be matching 1-d arrays")
        if np.any(np.diff(nu) <= 0):
            raise SpectrumError("detunings must be strictly increasing")
        if np.any(a < 0):
            raise SpectrumError("intensities must be non-negative")
        if self.normalization not in NORMALIZATIONS:
            raise SpectrumError(f"unknown normalization {self.normalization!r}")
        object.__setattr__(self, "detunings", nu)
        object.__setattr__(self, "intensities", a)

    @property
    def step(self) -> float:
        return float(self.detunings[1] - self.detunings[0])

    def area(self) -> float:
        return float(np.sum(self.intensities) * self.step)

    def moments(self) -> tuple[float, float]:
        """(mean, standard deviation) in Hz."""
        w = self.intensities * self.step
        total = w.sum()
        mean = float(np.sum(w * self.detunings) / total)
        var = float(np.sum(w * (self.detunings - mean) ** 2) / total)
        return mean, math.sqrt(max(var, 0.0))

    def normalized(self, normalization: str = "unit-area") -> "Spectrum":
        if normalization == "unit-area":
            a = self.intensities / self.area()
        elif normalization == "peak-unit":
            a = self.intensities / self.intensities.max()
        elif normalization == "raw":
            a = self.intensities
        else:
            raise SpectrumError(f"unknown normalization {normalization!r}")
        return Spectrum(self.detunings, a, normalization)

    def check_normalization(self, tol: float = 1e-6) -> bool:
        if self.normalization == "unit-area":
            return abs(self.area() - 1.0) <= tol
        if self.normalization == "peak-unit":
            return abs(self.intensities.max() - 1.0) <= tol
        return True

    def scaled_axis(self, scale_hz: float) -> tuple[np.ndarray, np.ndarray]:
        """Axis nu/scale and the density with respect to it (unit area kept)."""
        x = self.detunings / scale_hz
        return x, self.intensities * abs(scale_hz)

    def interp(self, nu) -> np.ndarray:
        return np.interp(nu, self.detunings, self.intensities, left=0.0, right=0.0)


def l1_distance(a: Spectrum, b: Spectrum, region: tuple[float, float] | None = None) -> float:
    """int |A - B| dnu, both spectra interpolated onto a shared grid.

    The grid spans the union of both supports at the finer of the two
    steps. With ``region`` the integral is restricted to ``lo <= nu <= hi``.
    """
    if np.array_equal(a.detunings, b.detunings):
        nu, step = a.detunings, a.step
        diff = np.abs(a.intensities - b.intensities)
    else:
        step = min(a.step, b.step)
        lo = min(a.detunings[0], b.detunings[0])
        hi = max(a.detunings[-1], b.detunings[-1])
        nu = lo + step * np.arange(int(math.floor((hi - lo) / step)) + 1)
        diff = np.abs(a.interp(nu) - b.interp(nu))
    if region is not None:
        diff = np.where((nu >= region[0]) & (nu <= region[1]), diff, 0.0)
    return float(np.sum(diff) * step)


def detuning_axis(lo: float, hi: float, step: float) -> np.ndarray:
    """Uniform axis of integer multiples of ``step`` covering [lo, hi]."""
    if step <= 0 or hi <= lo:
        raise SpectrumError("need lo < hi and a positive step")
    k0 = math.floor(lo / step)
    k1 = math.ceil(hi / step)
    return step * np.arange(k0, k1 + 1, dtype=float)


def bin_lines(positions, weights, grid: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Deposit delta lines onto a uniform grid as a density (per Hz).

    Each line is split between its two neighbouring grid points in
    proportion to proximity. Weight falling outside the grid raises.
    """
    positions = np.asarray(positions, dtype=float)
    weights = np.asarray(weights, dtype=float)
    grid = np.asarray(grid, dtype=float)
    step = grid[1] - grid[0]
    x = (positions - grid[0]) / step
    outside = (x < -1e-9) | (x > grid.size - 1 + 1e-9)
    lost = float(weights[outside].sum())
    if lost > tol:
        raise SpectrumError(f"grid does not cover the line support; lost weight {lost:.3e}")
    x = np.clip(x[~outside], 0.0, grid.size - 1)
    w = weights[~outside]
    i = np.minimum(np.floor(x).astype(int), grid.size - 2)
    f = x - i
    out = np.zeros(grid.size)
    np.add.at(out, i, w * (1.0 - f))
    np.add.at(out, i + 1, w * f)
    return out / step


def lines_to_spectrum(positions, weights, grid: np.ndarray,
                      normalization: str = "unit-area") -> Spectrum:
    spec = Spectrum(grid, bin_lines(positions, weights, grid), "raw")
    return spec.normalized(normalization) if normalization != "raw" else spec


# --- occupation models --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OccupationModel:
    """N independent atoms, each landing in level i with probability p_i.

    ``energies`` are line shifts in Hz. The remaining probability
    ``1 - sum(p)`` sits at zero shift (low-energy scattering states).
    """

    energies: np.ndarray
    probabilities: np.ndarray
    n_atoms: int
    max_total_bound: int = 8

    def __post_init__(self):
        e = np.atleast_1d(np.asarray(self.energies, dtype=float))
        p = np.atleast_1d(np.asarray(self.probabilities, dtype=float))
        if e.shape != p.shape:
            raise ValueError("energies and probabilities differ in length")
        if np.any(p < 0) or p.sum() > 1.0 + 1e-12:
            raise ValueError("probabilities must be non-negative with sum <= 1")
        if self.n_atoms < 1:
            raise ValueError("need at least one atom")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "probabilities", p)

    @property
    def remainder(self) -> float:
        return max(0.0, 1.0 - float(self.probabilities.sum()))


@dataclass(frozen=True, eq=False)
class LineList:
    positions: np.ndarray
    weights: np.ndarray
    occupations: np.ndarray  # (lines, levels)
    truncated_weight: float

    def labels(self) -> list[str]:
        return [occupation_label(o) for o in self.occupations]


_PREFIX = {1: "D", 2: "Tr", 3: "Te", 4: "P"}


def occupation_label(occ) -> str:
    """``D1``, ``Tr12``, ``Te111``... with 1 = deepest level; '' if empty."""
    occ = np.asarray(occ)
    total = int(occ.sum())
    if total == 0:
        return "atom"
    prefix = _PREFIX.get(total, f"X{total}")
    idx = np.repeat(np.arange(1, occ.size + 1), occ)
    return prefix + "".join(str(i) if i < 10 else f"({i})" for i in idx)


def binomial_lines(n_atoms: int, p0: float, eps_b: float) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("p0 must lie in [0, 1]")
    j = np.arange(n_atoms + 1)
    if p0 == 0.0 or p0 == 1.0:
        w = (j == (n_atoms if p0 == 1.0 else 0)).astype(float)
    else:
        logw = (gammaln(n_atoms + 1) - gammaln(j + 1) - gammaln(n_atoms - j + 1)
                + j * math.log(p0) + (n_atoms - j) * math.log1p(-p0))
        w = np.exp(logw)
    return j * eps_b, w


def binomial_spectrum(n_atoms: int, p0: float, eps_b: float, grid: np.ndarray,
                      tol: float = 1e-12) -> Spectrum:
    """Comb at j * eps_b with binomial weights, j = 0..N.

    The unshifted j = 0 line is kept so the comb is a probability
    distribution. Lines whose weight underflows below 1e-300 carry nothing
    and may fall outside ``grid``.
    """
    pos, w = binomial_lines(n_atoms, p0, eps_b)
    keep = w > 1e-300
    return Spectrum(grid, bin_lines(pos[keep], w[keep], grid, tol=tol), "unit-area")


def multinomial_lines(model: OccupationModel, prune: float = 1e-18) -> LineList:
    """Enumerate occupation vectors with at most ``max_total_bound`` atoms bound.

    A branch is dropped when even the most favourable completion cannot
    exceed ``prune``; everything not enumerated is counted as truncated.
    """
    e, p = model.energies, model.probabilities
    N, cap = model.n_atoms, model.max_total_bound
    q = model.remainder
    k = e.size
    if q <= 0.0:
        raise ValueError("multinomial enumeration needs residual scattering weight")
    logr = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)) - math.log(q), -np.inf)
    # rigorous bound on the growth factor from the remaining levels
    lam = N * p / q
    tail_bound = np.concatenate([np.cumsum(lam[::-1])[::-1], [0.0]])
    log_base = N * math.log(q)
    log_prune = math.log(prune) if prune > 0 else -math.inf

    pos, wts, occs = [], [], []
    occ = np.zeros(k, dtype=int)

    def visit(i: int, total: int, logw: float, shift: float):
        if logw + tail_bound[i] < log_prune:
            return
        if i == k:
            pos.append(shift)
            wts.append(math.exp(logw))
            occs.append(occ.copy())
            return
        visit(i + 1, total, logw, shift)
        lw = logw
        for j in range(1, min(cap, N) - total + 1):
            if not np.isfinite(logr[i]):
                break
            # multiply by (N - total - j + 1) / j * p_i / q
            lw += math.log(N - total - j + 1) - math.log(j) + logr[i]
            occ[i] = j
            visit(i + 1, total + j, lw, shift + j * e[i])
        occ[i] = 0

    visit(0, 0, log_base, 0.0)
    w = np.array(wts)
    order = np.argsort(pos, kind="stable")
    return LineList(np.asarray(pos)[order], w[order], np.asarray(occs).reshape(-1, k)[order],
                    max(0.0, 1.0 - float(w.sum())))


def multinomial_spectrum(model: OccupationModel, grid: np.ndarray,
                         max_truncation: float = 1e-6) -> tuple[Spectrum, LineList]:
    lines = multinomial_lines(model)
    if lines.truncated_weight > max_truncation:
        raise SpectrumError(
            f"enumeration with at most {model.max_total_bound} bound atoms misses "
            f"{lines.truncated_weight:.2e} of the weight; raise max_total_bound")
    spec = Spectrum(grid, bin_lines(lines.positions, lines.weights, grid), "raw")
    return spec, lines


def gaussian_limit(model: OccupationModel) -> tuple[float, float]:
    """Exact multinomial mean and standard deviation of the total shift."""
    e, p, N = model.energies, model.probabilities, model.n_atoms
    m1 = float(np.sum(p * e))
    m2 = float(np.sum(p * e * e))
    return N * m1, math.sqrt(max(N * (m2 - m1 * m1), 0.0))


def sample_multinomial(model: OccupationModel, draws: int, seed: int = 0) -> np.ndarray:
    """Monte-Carlo total shifts; used as an independent check of the moments."""
    rng = np.random.default_rng(seed)
    probs = np.append(model.probabilities, model.remainder)
    counts = rng.multinomial(model.n_atoms, probs / probs.sum(), size=draws)
    return counts[:, :-1] @ model.energies


def kolmogorov_to_normal(positions, weights) -> float:
    """Sup distance between a standardized discrete law and the normal CDF."""
    x = np.asarray(positions, dtype=float)
    w = np.asarray(weights, dtype=float)
    order = np.argsort(x)
    x, w = x[order], w[order] / w.sum()
    mu = np.sum(w * x)
    sd = math.sqrt(np.sum(w * (x - mu) ** 2))
    z = (x - mu) / sd
    cdf_hi = np.cumsum(w)
    cdf_lo = cdf_hi - w
    phi = ndtr(z)
    return float(max(np.max(np.abs(cdf_hi - phi)), np.max(np.abs(cdf_lo - phi))))


# --- lineshape ---------------------------------------------------------------

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


def gaussian_kernel(step: float, fwhm: float, reach: float = 10.0) -> np.ndarray:
    sigma = fwhm * FWHM_TO_SIGMA
    half = int(math.ceil(reach * sigma / step))
    k = np.exp(-0.5 * (np.arange(-half, half + 1) * step / sigma) ** 2)
    return k / k.sum()


def convolve_lineshape(spec: Spectrum, fwhm: float) -> Spectrum:
    """Convolve with a Gaussian of the given FWHM (Hz), keeping the axis."""
    if fwhm <= 0:
        raise SpectrumError("fwhm must be positive")
    if spec.step >= fwhm / 4.0:
        raise SpectrumError(f"grid spacing {spec.step:g} Hz too coarse for fwhm {fwhm:g} Hz")
    kernel = gaussian_kernel(spec.step, fwhm)
    out = signal.convolve(spec.intensities, kernel, mode="same")
    out = np.clip(out, 0.0, None)
    return Spectrum(spec.detunings, out, spec.normalization)


# --- CSV ---------------------------------------------------------------------

def spectrum_to_csv(spec: Spectrum) -> str:
    buf = io.StringIO()
    buf.write(f"# normalization: {spec.normalization}\n")
    buf.write("detuning_hz,intensity\n")
    for nu, a in zip(spec.detunings, spec.intensities):
        buf.write(f"{nu:.17g},{a:.17g}\n")
    return buf.getvalue()


def write_spectrum(spec: Spectrum, path) -> None:
    Path(path).write_text(spectrum_to_csv(spec))


def read_spectrum(path) -> Spectrum:
    norm = "raw"
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            if key.strip() == "normalization":
                norm = val.strip()
            continue
        if not line or line.startswith("detuning_hz"):
            continue
        nu, a = line.split(",")
        rows.append((float(nu), float(a)))
    arr = np.array(rows)
    return Spectrum(arr[:, 0], arr[:, 1], norm)
