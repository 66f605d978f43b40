import math

import numpy as np
import pytest

from cavmag.params import (
    GAMMA_GYRO,
    TWO_PI,
    DegenerateModesError,
    SystemParams,
    hz_to_rad,
    magnon_frequency,
    polariton_modes,
    rad_to_hz,
    reference_params,
    thermal_occupation,
)

W_C = TWO_PI * 7.875e9


def test_thermal_occupation_room_temperature():
    assert thermal_occupation(W_C, 300.0) == pytest.approx(793.3, rel=1e-3)


def test_thermal_occupation_one_kelvin():
    assert thermal_occupation(W_C, 1.0) == pytest.approx(2.18, rel=2e-3)


def test_thermal_occupation_zero_temperature():
    assert thermal_occupation(1.0, 0.0) == 0.0
    assert thermal_occupation(W_C, 0.0) == 0.0


def test_thermal_occupation_monotone():
    temps = np.linspace(0.5, 400, 50)
    n = [thermal_occupation(W_C, T) for T in temps]
    assert np.all(np.diff(n) > 0)
    omegas = np.linspace(1e9, 1e11, 50)
    n = [thermal_occupation(w, 10.0) for w in omegas]
    assert np.all(np.diff(n) < 0)


@pytest.mark.parametrize("omega", [0.0, -1.0])
def test_thermal_occupation_rejects_nonpositive_frequency(omega):
    with pytest.raises(ValueError):
        thermal_occupation(omega, 300.0)


def test_magnon_frequency_zero_detuning_field():
    assert magnon_frequency(0.28125) == pytest.approx(W_C, rel=1e-15)
    assert magnon_frequency(2 * 0.28125) == pytest.approx(2 * magnon_frequency(0.28125), rel=1e-15)
    assert magnon_frequency(0.270, GAMMA_GYRO) == pytest.approx(TWO_PI * 7.560e9, rel=1e-14)


@pytest.mark.parametrize("B,gamma", [(0.0, GAMMA_GYRO), (-0.1, GAMMA_GYRO), (0.1, 0.0)])
def test_magnon_frequency_rejects_nonpositive(B, gamma):
    with pytest.raises(ValueError):
        magnon_frequency(B, gamma)


def test_hz_round_trip_exact():
    rng = np.random.default_rng(0)
    typed = [float(f"{x:.15g}") for x in rng.uniform(1e5, 1e13, 3000)]
    for f in typed + [7.875e9, 10.8e6, 1.35e6, 1.06e6, 2e12, 7.865e9, 7.885e9]:
        assert rad_to_hz(hz_to_rad(f)) == f


def test_hz_round_trip_is_exact_preimage_for_any_double():
    rng = np.random.default_rng(1)
    for f in rng.uniform(1e5, 1e13, 2000):
        assert hz_to_rad(rad_to_hz(hz_to_rad(f))) == hz_to_rad(f)


def test_params_round_trip_through_hz():
    p = SystemParams.from_hz(7.875e9, 10.8e6, 1.35e6, 1.06e6, omega_m_hz=7.9e9, Omega_hz=2e12, omega_0_hz=7.87e9, T=1.0)
    d = p.to_hz()
    assert d["omega_c_hz"] == 7.875e9
    assert d["g_hz"] == 10.8e6
    assert d["kappa_m_hz"] == 1.06e6
    assert d["Omega_hz"] == 2e12
    assert d["omega_0_hz"] == 7.87e9
    assert d["omega_m_hz"] == 7.9e9


def test_from_hz_requires_exactly_one_of_field_or_frequency():
    with pytest.raises(ValueError):
        SystemParams.from_hz(7.875e9, 1e7, 1e6, 1e6)
    with pytest.raises(ValueError):
        SystemParams.from_hz(7.875e9, 1e7, 1e6, 1e6, omega_m_hz=7.8e9, B=0.28)


@pytest.mark.parametrize(
    "field,value",
    [("g", -1.0), ("kappa_c", 0.0), ("kappa_m", -1.0), ("Omega", -1.0), ("T", -1.0), ("omega_c", 0.0), ("omega_m", -1.0)],
)
def test_params_invariants(field, value):
    kw = dict(omega_c=1.0, omega_m=1.0, g=0.1, kappa_c=0.01, kappa_m=0.01)
    kw[field] = value
    with pytest.raises(ValueError):
        SystemParams(**kw)


def test_bath_zero_exactly_at_zero_temperature():
    b = reference_params(T=0.0).bath()
    assert b.n_c == 0.0 and b.n_m == 0.0


def test_drive_frequency_defaults_to_cavity():
    p = SystemParams(omega_c=2.0, omega_m=1.0, g=0.1, kappa_c=0.01, kappa_m=0.01)
    assert p.omega_0 == 2.0


def test_polariton_splitting_at_zero_detuning():
    p = reference_params()
    modes = polariton_modes(p)
    expected = 2 * math.sqrt(p.g**2 - ((p.kappa_c - p.kappa_m) / 2) ** 2)
    assert (modes.omega_plus - modes.omega_minus).real == pytest.approx(expected, rel=1e-12)
    assert (modes.omega_plus - modes.omega_minus).real / TWO_PI == pytest.approx(21.6e6, rel=1e-3)


def test_full_participation_at_zero_detuning():
    modes = polariton_modes(reference_params())
    assert modes.participation == pytest.approx(1.0, abs=1e-10)
    equal = polariton_modes(reference_params().with_(kappa_m=reference_params().kappa_c))
    assert equal.participation == pytest.approx(1.0, abs=1e-12)


def test_decoupled_modes():
    p = SystemParams(omega_c=10.0, omega_m=9.0, g=0.0, kappa_c=0.1, kappa_m=0.2)
    modes = polariton_modes(p)
    got = sorted([modes.omega_plus, modes.omega_minus], key=lambda z: z.real)
    assert got == [pytest.approx(9.0 - 0.2j, abs=1e-14), pytest.approx(10.0 - 0.1j, abs=1e-14)]


def test_exceptional_point_raises():
    # equal frequencies and g = |kappa_c - kappa_m| / 2 makes the root vanish
    p = SystemParams(omega_c=1.0, omega_m=1.0, g=0.05, kappa_c=0.2, kappa_m=0.1)
    with pytest.raises(DegenerateModesError):
        polariton_modes(p)


@pytest.mark.parametrize("B", [0.25, 0.27, 0.28125, 0.29, 0.32])
def test_mode_invariants(B):
    p = reference_params(B=B)
    modes = polariton_modes(p, initial_c=3.0 - 1.0j)
    M = p.mode_matrix()
    normM = np.linalg.norm(M, 2)
    for w, v in ((modes.omega_plus, modes.vec_plus), (modes.omega_minus, modes.vec_minus)):
        assert np.linalg.norm(M @ v - w * v) <= 1e-9 * normM * np.linalg.norm(v)
        assert abs(np.linalg.norm(v) - 1.0) <= 1e-12
    assert abs(modes.omega_plus + modes.omega_minus - np.trace(M)) <= 1e-9 * abs(np.trace(M))
    assert abs(modes.omega_plus * modes.omega_minus - np.linalg.det(M)) <= 1e-9 * abs(np.linalg.det(M))
    recon = modes.gamma_plus * modes.vec_plus + modes.gamma_minus * modes.vec_minus
    assert np.allclose(recon, [3.0 - 1.0j, 0.0], rtol=0, atol=1e-9 * abs(3.0 - 1.0j))
    assert min(modes.coeff_A, modes.coeff_B, modes.coeff_C) >= 0
    # the photon and magnon forms of the interference coefficient coincide
    assert modes.coeff_C == pytest.approx(modes.coeff_C_beta, rel=1e-9)
    assert modes.omega_plus.real >= modes.omega_minus.real


def test_beat_frequency_uses_squared_detuning():
    p = reference_params(B=0.27)
    modes = polariton_modes(p)
    assert modes.delta_omega == pytest.approx(math.sqrt((p.omega_c - p.omega_m) ** 2 + 4 * p.g**2), rel=1e-15)
    assert modes.kappa_bar == pytest.approx((p.kappa_c + p.kappa_m) / 2)
