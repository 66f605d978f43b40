"""Closed-form results used as oracles for the numerical solvers."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .params import PolaritonModes, SystemParams


@dataclass(frozen=True)
class SteadyState:
    alpha_0: complex
    beta_0: complex
    n_photon: float
    n_magnon: float
    gamma_mix_m: float
    gamma_mix_c: float


@dataclass(frozen=True)
class PulseEnvelope:
    t: float
    c_sq: float
    m_sq: float


def steady_amplitudes(params: SystemParams) -> tuple[complex, complex]:
    """Stationary coherent amplitudes in the frame rotating at the drive frequency.

    Solves the 2x2 linear system obtained by setting the mean-field time
    derivatives to zero. The result differs from the printed closed form by
    an overall sign; moduli and relative phase agree.
    """
    w0 = params.omega_0
    M = np.array(
        [
            [-1j * (params.omega_c - w0) - params.kappa_c, -1j * params.g],
            [-1j * params.g, -1j * (params.omega_m - w0) - params.kappa_m],
        ]
    )
    a, b = np.linalg.solve(M, np.array([-params.Omega, 0.0], dtype=complex))
    return complex(a), complex(b)


def mixing_fractions(params: SystemParams) -> tuple[float, float]:
    """Thermal mixing fractions ``(gamma_m, gamma_c)``."""
    g2 = params.g ** 2
    kc, km = params.kappa_c, params.kappa_m
    ks = kc + km
    den = g2 * ks ** 2 + kc * km * ks ** 2 + kc * km * (params.omega_m - params.omega_c) ** 2
    return g2 * km * ks / den, g2 * kc * ks / den


def steady_occupations(params: SystemParams) -> SteadyState:
    a0, b0 = steady_amplitudes(params)
    gm, gc = mixing_fractions(params)
    bath = params.bath()
    n_ph = abs(a0) ** 2 + (1.0 - gm) * bath.n_c + gm * bath.n_m
    n_mag = abs(b0) ** 2 + (1.0 - gc) * bath.n_m + gc * bath.n_c
    return SteadyState(a0, b0, n_ph, n_mag, gm, gc)


def pulse_envelopes(modes: PolaritonModes, c0_sq: float, times) -> list[PulseEnvelope]:
    """Strong-coupling interference envelopes of the coherent photon and magnon intensities."""
    c_sq, m_sq = pulse_envelope_arrays(modes, c0_sq, times)
    return [PulseEnvelope(float(t), float(c), float(m)) for t, c, m in zip(np.atleast_1d(times), c_sq, m_sq)]


def pulse_envelope_arrays(modes: PolaritonModes, c0_sq: float, times) -> tuple[np.ndarray, np.ndarray]:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    # strong coupling: kappa << g, i.e. the beat is much faster than the decay
    if modes.kappa_bar > 0.1 * modes.delta_omega:
        warnings.warn("pulse envelopes assume strong coupling (kappa << g)", RuntimeWarning, stacklevel=2)
    decay = np.exp(-2.0 * modes.kappa_bar * t)
    beat = np.cos(modes.delta_omega * t)
    c_sq = c0_sq * (modes.coeff_A + modes.coeff_B + 2.0 * modes.coeff_C * beat) * decay
    m_sq = c0_sq * modes.coeff_C * (2.0 - 2.0 * beat) * decay
    return c_sq, m_sq


def g2_zero_detuning(coh_sq, n_th):
    """Second-order coherence of a displaced thermal field.

    ``((x + 2n)^2 - 2n^2) / (x + n)^2`` with ``x`` the coherent intensity and
    ``n`` the thermal occupation. Works elementwise on arrays. Evaluated as
    ``1 + v*(2 - v)`` with ``v = n/(x + n)``, which cannot under- or overflow.
    """
    x = np.asarray(coh_sq, dtype=float)
    n = np.asarray(n_th, dtype=float)
    if np.any(x < 0) or np.any(n < 0):
        raise ValueError("coherent intensity and thermal occupation must be non-negative")
    if np.any((x == 0) & (n == 0)):
        raise ValueError("g2 undefined for the vacuum (both inputs zero)")
    v = n / (x + n)
    out = 1.0 + v * (2.0 - v)
    return float(out) if out.ndim == 0 else out


def g2_steady_zero_detuning(params: SystemParams) -> tuple[float, float]:
    """Closed-form photon and magnon g2 for the continuously driven steady state.

    Only valid when both baths carry the same occupation (omega_m == omega_c).
    """
    bath = params.bath()
    if not np.isclose(bath.n_c, bath.n_m, rtol=1e-12, atol=0.0):
        raise ValueError("closed form requires equal bath occupations (zero detuning)")
    a0, b0 = steady_amplitudes(params)
    n = 0.5 * (bath.n_c + bath.n_m)
    return g2_zero_detuning(abs(a0) ** 2, n), g2_zero_detuning(abs(b0) ** 2, n)
