"""Cavity magnon-polariton dynamics: closed forms, moment hierarchy and P-function trajectories."""

__version__ = "0.1.0"

from .analytic import (
    g2_steady_zero_detuning,
    g2_zero_detuning,
    mixing_fractions,
    pulse_envelope_arrays,
    pulse_envelopes,
    steady_amplitudes,
    steady_occupations,
)
from .moments import (
    build_system,
    initial_coherent_thermal,
    integrate,
    moment_indices,
    steady_state,
)
from .params import (
    BathOccupations,
    PolaritonModes,
    SystemParams,
    polariton_modes,
    reference_params,
    thermal_occupation,
)
from .trajectories import EnsembleConfig, InitialSpec, g2_estimates, run_ensemble, sample_initial

__all__ = [
    "BathOccupations",
    "EnsembleConfig",
    "InitialSpec",
    "PolaritonModes",
    "SystemParams",
    "build_system",
    "g2_estimates",
    "g2_steady_zero_detuning",
    "g2_zero_detuning",
    "initial_coherent_thermal",
    "integrate",
    "mixing_fractions",
    "moment_indices",
    "polariton_modes",
    "pulse_envelope_arrays",
    "pulse_envelopes",
    "run_ensemble",
    "sample_initial",
    "steady_amplitudes",
    "steady_occupations",
    "steady_state",
    "reference_params",
    "thermal_occupation",
]
