"""From thermal to coherent light as the drive grows.

Without drive both modes sit in thermal equilibrium (g2 = 2). A strong
drive swamps the thermal noise and g2 falls to 1. At zero detuning the drive
at 7.875 GHz lands in the gap between the two hybrid modes, so it needs far
more strength than a drive tuned onto either one.

Run: python3 demos/03_g2_transition.py
"""
import numpy as np

from cavmag import build_system, reference_params, steady_state

drives = np.logspace(6, 12, 13)
detuned = (7.865e9, 7.875e9, 7.885e9)

# %% Photon and magnon g2 along the drive axis
header = "  Omega (Hz) " + "".join(f"  pho@{f / 1e9:.3f}  mag@{f / 1e9:.3f}" for f in detuned)
print(header)
for om in drives:
    cells = []
    for f in detuned:
        mv = steady_state(build_system(reference_params(Omega_hz=om, omega_0_hz=f), 4))
        cells.append(f"  {mv.g2_photon:9.4f}  {mv.g2_magnon:9.4f}")
    print(f"{om:12.3e}" + "".join(cells))

# %% Colder baths need less drive
print("\n T (K)   g2 photon at Omega = 1e8 Hz")
for T in (1.0, 10.0, 100.0, 300.0):
    mv = steady_state(build_system(reference_params(Omega_hz=1e8, T=T), 4))
    print(f"{T:6.1f}   {mv.g2_photon:.4f}")
