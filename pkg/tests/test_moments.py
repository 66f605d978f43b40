import io
import math

import numpy as np
import pytest

from cavmag.moments import (
    C,
    M,
    N_MAGNON,
    N_PHOTON,
    ONE,
    PHOTON_PAIRS,
    MAGNON_PAIRS,
    build_system,
    conjugate_index,
    dump_generator,
    initial_coherent_thermal,
    integrate,
    moment_indices,
    steady_state,
)
from cavmag.analytic import mixing_fractions
from cavmag.params import BathOccupations, SystemParams, reference_params


def coeff(system, row, col, which="matrix"):
    m = getattr(system, which)
    return complex(m[system.position[row], system.position[col]])


def test_index_ordering_and_count():
    idx = moment_indices(4)
    assert idx[0] == ONE
    orders = [sum(i) for i in idx]
    assert orders == sorted(orders)
    # number of 4-tuples with sum <= N is C(N+4, 4)
    assert len(idx) == math.comb(8, 4)
    for n in range(5):
        block = [i for i in idx if sum(i) == n]
        assert block == sorted(block)
    assert conjugate_index((1, 2, 3, 0)) == (2, 1, 0, 3)


def test_rejects_order_zero():
    with pytest.raises(ValueError):
        build_system(reference_params(), 0)


def test_mean_field_row_in_laboratory_frame():
    p = reference_params(Omega_hz=1e9, omega_0_hz=7.87e9)
    s = build_system(p, 2, frame_freq=0.0)
    assert coeff(s, C, C) == pytest.approx(-1j * p.omega_c - p.kappa_c)
    assert coeff(s, C, M) == pytest.approx(-1j * p.g)
    # drive enters <c> with e^{-i omega_0 t}
    assert coeff(s, C, ONE, "drive_minus") == pytest.approx(p.Omega)
    assert coeff(s, C, ONE, "drive_plus") == 0
    assert s.drive_detuning == p.omega_0
    # <c+> is the conjugate row
    assert coeff(s, (1, 0, 0, 0), (1, 0, 0, 0)) == pytest.approx(1j * p.omega_c - p.kappa_c)
    assert coeff(s, (1, 0, 0, 0), ONE, "drive_plus") == pytest.approx(p.Omega)


def test_photon_number_row_in_laboratory_frame():
    p = reference_params(Omega_hz=1e9, omega_0_hz=7.87e9, T=300.0)
    s = build_system(p, 2, frame_freq=0.0)
    n_c = p.bath().n_c
    assert coeff(s, N_PHOTON, N_PHOTON) == pytest.approx(-2 * p.kappa_c)
    assert coeff(s, N_PHOTON, (1, 0, 0, 1)) == pytest.approx(-1j * p.g)
    assert coeff(s, N_PHOTON, (0, 1, 1, 0)) == pytest.approx(1j * p.g)
    assert coeff(s, N_PHOTON, ONE) == pytest.approx(2 * p.kappa_c * n_c)
    assert coeff(s, N_PHOTON, C, "drive_plus") == pytest.approx(p.Omega)
    assert coeff(s, N_PHOTON, (1, 0, 0, 0), "drive_minus") == pytest.approx(p.Omega)
    row = s.generator(0.0)[s.position[N_PHOTON]]
    assert row.nnz == 6


def test_normalisation_row_is_zero():
    s = build_system(reference_params(Omega_hz=1e9, T=300.0), 4)
    for name in ("matrix", "drive_plus", "drive_minus"):
        assert getattr(s, name)[0].nnz == 0


def test_block_structure():
    s = build_system(reference_params(Omega_hz=1e9, T=300.0, omega_0_hz=7.86e9), 4, frame_freq=7.8e9 * 2 * np.pi)
    order = np.array([sum(i) for i in s.indices])
    for name, allowed in (("drive_plus", {1}), ("drive_minus", {1})):
        coo = getattr(s, name).tocoo()
        assert set(order[coo.row] - order[coo.col]) <= allowed
    coo = s.matrix.tocoo()
    assert set(order[coo.row] - order[coo.col]) <= {0, 2}


def test_rotating_frame_is_autonomous():
    p = reference_params(Omega_hz=1e9, omega_0_hz=7.86e9)
    s = build_system(p, 3)
    assert s.autonomous and s.drive_detuning == 0.0
    assert (s.generator(0.0) != s.generator(1e-7)).nnz == 0


def test_decoupled_decay():
    p = SystemParams(omega_c=3.0, omega_m=2.0, g=0.0, kappa_c=0.4, kappa_m=0.1)
    s = build_system(p, 2)
    t = np.linspace(0, 5, 11)
    series = integrate(s, initial_coherent_thermal(7.0, BathOccupations(0.0, 0.0), 2), (0, 5), times=t)
    assert np.allclose(series.n_photon, 7.0 * np.exp(-0.8 * t), rtol=1e-8)


def test_initial_state_examples():
    b = BathOccupations(0.0, 1.7)
    v = initial_coherent_thermal(0.0, b, 2)
    nz = {idx: val for idx, val in zip(v.indices, v.values) if val != 0}
    assert nz == {ONE: 1.0, N_MAGNON: 1.7}
    v = initial_coherent_thermal(1e8, b, 4)
    assert v[PHOTON_PAIRS] == 1e16
    assert v.g2_photon == 1.0
    assert v[MAGNON_PAIRS] == pytest.approx(2 * 1.7**2)
    assert v.g2_magnon == pytest.approx(2.0)
    v = initial_coherent_thermal(4.0, BathOccupations(0.0, 0.0), 2)
    assert v[C] == 2.0 and v[N_PHOTON] == 4.0
    with pytest.raises(ValueError):
        initial_coherent_thermal(-1.0, b, 2)


def test_undriven_steady_state():
    p = reference_params(B=0.27, Omega_hz=0.0, T=50.0)
    v = steady_state(build_system(p, 4))
    gm, _ = mixing_fractions(p)
    b = p.bath()
    assert v.n_photon == pytest.approx((1 - gm) * b.n_c + gm * b.n_m, rel=1e-10)
    for idx, val in zip(v.indices, v.values):
        p_, q, r, s = idx
        if p_ + r != q + s:
            # phase-carrying moments vanish without a drive
            assert val == 0


def test_hierarchical_truncation_is_exact():
    p = reference_params(B=0.279, Omega_hz=1e9, omega_0_hz=7.87e9, T=300.0)
    full = steady_state(build_system(p, 4))
    for k in (1, 2, 3):
        low = steady_state(build_system(p, k))
        assert np.array_equal(full.values[: len(low.values)], low.values)
        assert np.array_equal(steady_state(build_system(p, 4).truncated(k)).values, low.values)


def test_steady_state_requires_corotating_frame():
    p = reference_params(Omega_hz=1e9, omega_0_hz=7.87e9)
    with pytest.raises(ValueError):
        steady_state(build_system(p, 2, frame_freq=p.omega_c))


def test_steady_state_symmetries():
    p = reference_params(B=0.29, Omega_hz=1e9, omega_0_hz=7.88e9, T=300.0)
    v = steady_state(build_system(p, 4))
    assert v.conjugation_error() <= 1e-9
    for idx, val in zip(v.indices, v.values):
        if idx[0] == idx[1] and idx[2] == idx[3]:
            assert abs(val.imag) <= 1e-9 * abs(val) and val.real >= 0


@pytest.fixture(scope="module")
def pulse_series():
    p = reference_params(B=0.279, T=300.0)
    s = build_system(p, 4)
    t = np.linspace(0, 300e-9, 301)
    return integrate(s, initial_coherent_thermal(1e4, p.bath(), 4), (0, t[-1]), times=t)


def test_integration_preserves_conjugation_and_norm(pulse_series):
    assert np.all(pulse_series[ONE] == 1.0)
    assert max(v.conjugation_error() for v in pulse_series) <= 1e-8


def test_cauchy_schwarz(pulse_series):
    n = pulse_series.n_photon
    pairs = pulse_series[PHOTON_PAIRS].real
    assert np.all(pairs >= 0)
    assert np.all(n**2 <= pairs + n)
    nm = pulse_series.n_magnon
    assert np.all(nm**2 <= pulse_series[MAGNON_PAIRS].real + nm)


def test_frame_invariance():
    p = reference_params(B=0.279, Omega_hz=1e9, omega_0_hz=7.87e9, T=300.0)
    init = initial_coherent_thermal(1e4, p.bath(), 2)
    t = np.linspace(0, 2e-9, 5)
    rot = integrate(build_system(p, 2), init, (0, t[-1]), times=t, rtol=1e-11)
    lab = integrate(build_system(p, 2, frame_freq=0.0), init, (0, t[-1]), times=t, rtol=1e-11, dt_max=2e-12)
    for idx in rot.indices:
        if idx[0] == idx[1] and idx[2] == idx[3]:
            assert np.allclose(lab[idx], rot[idx], rtol=1e-6, atol=0)


def test_times_past_span_are_covered():
    p = reference_params()
    t = np.arange(201) * 2e-9
    series = integrate(build_system(p, 1), initial_coherent_thermal(1.0, p.bath(), 1), (0, 400e-9), times=t)
    assert len(series) == 201


def test_mismatched_initial_vector_rejected():
    p = reference_params()
    with pytest.raises(ValueError):
        integrate(build_system(p, 2), initial_coherent_thermal(1.0, p.bath(), 1), (0, 1e-9))


def test_generator_dump_format():
    s = build_system(reference_params(Omega_hz=1e9, T=300.0), 1)
    buf = io.StringIO()
    dump_generator(s, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("% moment generator order=1")
    G = s.generator()
    assert len(lines) - 1 == G.nnz
    first = lines[1].split()
    assert len(first) == 10
    row, col = tuple(map(int, first[:4])), tuple(map(int, first[4:8]))
    assert complex(float(first[8]), float(first[9])) == G[s.position[row], s.position[col]]


def test_flipped_coefficient_hook():
    s = build_system(reference_params(Omega_hz=1e9), 2)
    f = s.with_flipped_coefficient(N_PHOTON, (1, 0, 0, 1))
    assert coeff(f, N_PHOTON, (1, 0, 0, 1)) == -coeff(s, N_PHOTON, (1, 0, 0, 1))
    with pytest.raises(ValueError):
        s.with_flipped_coefficient(N_PHOTON, (2, 0, 0, 0))
