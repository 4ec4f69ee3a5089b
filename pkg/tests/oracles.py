"""Independent reference calculations used by the tests."""

import math

import numpy as np
from scipy import constants as sc
from scipy.linalg import expm
from scipy.optimize import brentq
from scipy.special import gammaln


def square_well_ground(depth: float, width: float, mass: float) -> float:
    """Lowest s-wave bound energy of a finite spherical well (atomic units).

    Root of k cot(k b) = -kappa with k^2 = 2m(V0 + E), kappa^2 = -2mE.
    """
    def f(E):
        k = math.sqrt(2 * mass * (depth + E))
        kap = math.sqrt(-2 * mass * E)
        return k * math.cos(k * width) + kap * math.sin(k * width)

    # ground state has k b in (pi/2, pi) for a well holding one level; scan for the first root
    Es = np.linspace(-depth * (1 - 1e-9), -1e-12 * depth, 20001)
    vals = np.array([f(E) for E in Es])
    i = np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0][0]
    return brentq(f, Es[i], Es[i + 1], xtol=1e-16 * depth, rtol=1e-14)


def contact_shift_hz(density_m3: float, a_bohr: float) -> float:
    """rho * 2 pi hbar^2 a / m_e / h from CODATA constants, without package code."""
    a = a_bohr * sc.physical_constants["Bohr radius"][0]
    return density_m3 * 2 * math.pi * sc.hbar ** 2 * a / sc.m_e / sc.h


def poisson_comb(lam: float, eps_hz: float, grid: np.ndarray, sigma_hz: float) -> np.ndarray:
    """Window-broadened Poisson comb, unit area, sum_j e^-lam lam^j/j! G(nu - j eps)."""
    jmax = int(lam + 12 * math.sqrt(lam) + 20)
    j = np.arange(jmax + 1)
    w = np.exp(j * math.log(lam) - lam - gammaln(j + 1))
    g = np.exp(-0.5 * ((grid[:, None] - j[None, :] * eps_hz) / sigma_hz) ** 2)
    return g @ w / (math.sqrt(2 * math.pi) * sigma_hz)


def propagated_overlap(d: np.ndarray, e: np.ndarray, s: np.ndarray, s_energy: float,
                       dt_au: float, n_steps: int) -> np.ndarray:
    """<s| e^{i h0 t} e^{-i h t} |s> by repeated application of the exact one-step propagator."""
    H = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    U = expm(-1j * dt_au * H)
    psi = s.astype(complex)
    out = np.empty(n_steps + 1, dtype=complex)
    for k in range(n_steps + 1):
        out[k] = np.exp(1j * s_energy * k * dt_au) * np.vdot(s, psi)
        psi = U @ psi
    return out
