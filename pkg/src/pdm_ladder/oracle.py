"""Closed-form reference states built from Hermite functions.

In the mass-weighted coordinate u = sqrt(dE)/hbar * F the raising operator
acts on the polynomial part as the Hermite raising map at the shifted
argument z = u + i lam / sqrt(dE).  For lam != 0 the argument is complex, so
the reference family is H_n(z) exp(-u^2/2) exp(-i lam F / hbar), not the
real-argument Hermite function times a phase.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import eval_laguerre

__all__ = ["scaled_hermite", "hermite_envelope", "reference_norm_sq", "reference_state_values"]


def scaled_hermite(n_max: int, z) -> list:
    """H_k(z) / sqrt(2^k k!) for k = 0..n_max via the three-term recurrence."""
    z = np.asarray(z)
    out = [np.ones_like(z, dtype=complex)]
    if n_max >= 1:
        out.append(math.sqrt(2.0) * z)
    for k in range(1, n_max):
        out.append(math.sqrt(2.0 / (k + 1)) * z * out[k] - math.sqrt(k / (k + 1)) * out[k - 1])
    return out


def _shift(params):
    return params.lam / math.sqrt(params.delta_e)


def hermite_envelope(n: int, F, params) -> np.ndarray:
    """|H_n(z)| exp(-u^2/2) / sqrt(2^n n!) as a function of F (no m^1/4 factor)."""
    u = math.sqrt(params.delta_e) / params.hbar * np.asarray(F, dtype=float)
    z = u + 1j * _shift(params)
    return np.abs(scaled_hermite(n, z)[n]) * np.exp(-0.5 * u ** 2)


def reference_norm_sq(n: int, params) -> float:
    """Integral over u of |H_n(u + i mu)|^2 exp(-u^2) / (2^n n!) = sqrt(pi) L_n(-2 mu^2)."""
    mu = _shift(params)
    return math.sqrt(math.pi) * float(eval_laguerre(n, -2.0 * mu ** 2))


def reference_state_values(n_max: int, F, m, params) -> list:
    """Normalised reference states m^1/4 H_n(z) e^{-u^2/2} e^{-i lam F/hbar}.

    Normalisation is analytic over the whole line in u, so truncation of
    the grid does not enter.
    """
    F = np.asarray(F, dtype=float)
    s = math.sqrt(params.delta_e) / params.hbar
    u = s * F
    base = np.asarray(m, dtype=float) ** 0.25 * np.exp(-0.5 * u ** 2) * np.exp(-1j * params.lam * F / params.hbar)
    hs = scaled_hermite(n_max, u + 1j * _shift(params))
    # dx-integral of m^1/2 |.|^2 = (1/s) * u-integral
    return [h * base / math.sqrt(reference_norm_sq(n, params) / s) for n, h in enumerate(hs)]
