import numpy as np
import pytest

from cavmag.fock import FockLindblad, desk_params
from cavmag.moments import build_system, initial_coherent_thermal, integrate, moment_indices
from cavmag.params import SystemParams


@pytest.fixture(scope="module")
def small():
    p = SystemParams(omega_c=10.2, omega_m=9.9, g=0.6, kappa_c=0.3, kappa_m=0.2, Omega=0.3, omega_0=10.0, n_thermal=(0.1, 0.2))
    return p, FockLindblad(p, cutoff=14)


def test_rhs_preserves_trace_and_hermiticity(small):
    p, fl = small
    rho = fl.initial_state(0.8)
    d = fl.rhs(rho)
    # truncation leaks trace only through the (tiny) top-level population
    assert abs(np.einsum("ijij->", d)) < 1e-9
    dmat = d.reshape(fl.cutoff**2, fl.cutoff**2)
    assert np.allclose(dmat, dmat.conj().T, atol=1e-12)


def test_initial_state_moments(small):
    _, fl = small
    rho = fl.initial_state(0.8)
    assert fl.moment(rho, (0, 0, 0, 0)) == pytest.approx(1.0, abs=1e-12)
    assert fl.moment(rho, (1, 1, 0, 0)) == pytest.approx(0.8, rel=1e-9)
    assert fl.moment(rho, (0, 1, 0, 0)) == pytest.approx(np.sqrt(0.8), rel=1e-9)
    assert fl.moment(rho, (0, 0, 1, 1)) == pytest.approx(0.2, rel=1e-6)


def test_agrees_with_hierarchy_at_small_cutoff(small):
    p, fl = small
    t = np.linspace(0, 0.5, 3)
    s = build_system(p, 2)
    ms = integrate(s, initial_coherent_thermal(0.8, p.bath(), 2), (0, 0.5), times=t, rtol=1e-11)
    fs = fl.evolve(fl.initial_state(0.8), t, s.indices)
    rel = np.abs(fs.values - ms.values).max(axis=0) / np.abs(ms.values).max(axis=0)
    assert rel.max() < 1e-4
    assert fl.tail_weight(fl.final_state) < 1e-5


def test_detects_flipped_generator_coefficient(small):
    p, fl = small
    t = np.linspace(0, 0.5, 3)
    s = build_system(p, 2).with_flipped_coefficient((1, 1, 0, 0), (1, 0, 0, 1))
    ms = integrate(s, initial_coherent_thermal(0.8, p.bath(), 2), (0, 0.5), times=t)
    fs = fl.evolve(fl.initial_state(0.8), t, s.indices)
    rel = np.abs(fs.values - ms.values).max(axis=0) / np.abs(ms.values).max(axis=0)
    assert rel.max() > 1e-3


def test_desk_parameters_within_oracle_limits():
    b = desk_params().bath()
    assert b.n_c <= 2 and b.n_m <= 2


def test_evolve_rejects_unsorted_times(small):
    _, fl = small
    with pytest.raises(ValueError):
        fl.evolve(fl.initial_state(0.1), [0.2, 0.1], moment_indices(1))
