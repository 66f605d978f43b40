"""Randomised invariants across the closed forms and the moment hierarchy."""
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cavmag import analytic
from cavmag.moments import (
    build_system,
    initial_coherent_thermal,
    integrate,
    moment_indices,
    steady_state,
)
from cavmag.params import BathOccupations, DegenerateModesError, SystemParams, hz_to_rad, polariton_modes, rad_to_hz

rates = st.floats(0.05, 2.0)


@st.composite
def desk_params(draw, drive=True):
    return SystemParams(
        omega_c=draw(st.floats(8.0, 12.0)),
        omega_m=draw(st.floats(8.0, 12.0)),
        g=draw(st.floats(0.0, 1.5)),
        kappa_c=draw(rates),
        kappa_m=draw(rates),
        Omega=draw(st.floats(0.0, 2.0)) if drive else 0.0,
        omega_0=draw(st.floats(8.0, 12.0)),
        n_thermal=(draw(st.floats(0.0, 3.0)), draw(st.floats(0.0, 3.0))),
    )


@given(st.floats(0.0, 1e12), st.floats(0.0, 1e4))
def test_g2_displaced_thermal_bounds(x, n):
    assume(x > 0 or n > 0)
    g2 = analytic.g2_zero_detuning(x, n)
    assert 1.0 - 1e-12 <= g2 <= 2.0 + 1e-12


@given(st.integers(1, 10**14), st.integers(-9, 3))
def test_hz_round_trip_for_typed_values(mantissa, exponent):
    f = float(f"{mantissa}e{exponent}")
    assert rad_to_hz(hz_to_rad(f)) == f


@given(st.floats(1e-3, 1e13))
def test_hz_inverse_is_a_preimage(f):
    w = hz_to_rad(f)
    assert hz_to_rad(rad_to_hz(w)) == w


@settings(deadline=None)
@given(desk_params(drive=False))
def test_mode_decomposition_invariants(p):
    assume(p.g > 0)
    try:
        modes = polariton_modes(p, initial_c=1.0)
    except DegenerateModesError:
        # at or numerically next to the exceptional point the decomposition is undefined
        assume(False)
    # eigenvalues of the damped coupling matrix
    M = np.array([[p.omega_c - 1j * p.kappa_c, p.g], [p.g, p.omega_m - 1j * p.kappa_m]])
    assert modes.omega_plus + modes.omega_minus == pytest.approx(np.trace(M), abs=1e-9)
    assert modes.omega_plus * modes.omega_minus == pytest.approx(np.linalg.det(M), abs=1e-9)
    assert modes.omega_plus.imag < 0 and modes.omega_minus.imag < 0
    assert modes.omega_plus.real >= modes.omega_minus.real
    for v in (modes.vec_plus, modes.vec_minus):
        assert np.linalg.norm(v) == pytest.approx(1.0)
    c0, m0 = modes.amplitudes(0.0)
    assert complex(c0) == pytest.approx(1.0, abs=1e-9)
    assert complex(m0) == pytest.approx(0.0, abs=1e-9)
    assert modes.coeff_C == pytest.approx(modes.coeff_C_beta, rel=1e-9)


@settings(deadline=None, max_examples=30)
@given(desk_params(), st.floats(0.0, 4.0), st.booleans())
def test_hierarchy_preserves_conjugation_symmetry(p, n_inject, cavity_thermal):
    system = build_system(p, 3)
    init = initial_coherent_thermal(n_inject, p.bath(), 3, cavity_thermal=cavity_thermal)
    series = integrate(system, init, (0.0, 2.0), times=[0.0, 1.0, 2.0])
    for (a, b, c, d) in moment_indices(3):
        assert np.allclose(series[(a, b, c, d)], np.conj(series[(b, a, d, c)]), rtol=1e-7, atol=1e-9)
    n = series.n_photon
    assert np.all(n >= -1e-9)


@settings(deadline=None, max_examples=40)
@given(desk_params())
def test_steady_state_matches_closed_form(p):
    mv = steady_state(build_system(p, 2))
    ref = analytic.steady_occupations(p)
    assert mv.n_photon == pytest.approx(ref.n_photon, rel=1e-8, abs=1e-12)
    assert mv.n_magnon == pytest.approx(ref.n_magnon, rel=1e-8, abs=1e-12)
    a0, b0 = analytic.steady_amplitudes(p)
    assert mv[(0, 1, 0, 0)] == pytest.approx(a0, rel=1e-8, abs=1e-12)
    assert mv[(0, 0, 0, 1)] == pytest.approx(b0, rel=1e-8, abs=1e-12)


@given(st.floats(0.0, 1e4), st.floats(0.0, 1e3), st.floats(0.0, 1e3))
def test_displaced_thermal_initial_moments(x, n_c, n_m):
    v = initial_coherent_thermal(x, BathOccupations(n_c, n_m), 4, cavity_thermal=True)
    assert v[(1, 1, 0, 0)].real == pytest.approx(x + n_c, rel=1e-12, abs=1e-12)
    assert v[(2, 2, 0, 0)].real == pytest.approx(x * x + 4 * x * n_c + 2 * n_c * n_c, rel=1e-12, abs=1e-12)
    assert v[(0, 1, 0, 0)].real == pytest.approx(math.sqrt(x), rel=1e-12, abs=1e-12)
    assert v[(1, 1, 1, 1)].real == pytest.approx((x + n_c) * n_m, rel=1e-12, abs=1e-9)
    assert v[(0, 0, 2, 2)].real == pytest.approx(2 * n_m * n_m, rel=1e-12, abs=1e-12)
