"""Level repulsion in the continuously driven cavity.

Sweep the drive frequency at a few bias fields and watch the single
steady-state photon peak split into two. The gap is smallest where the
magnon frequency crosses the cavity, and there it is close to 2g.

Run: python3 demos/01_level_repulsion.py
"""
import numpy as np

from cavmag import reference_params
from cavmag.scenarios import anticrossing, photon_number_vs_drive
from cavmag.params import magnon_frequency, rad_to_hz

# %% Photon number along the drive axis at zero detuning
params = reference_params(Omega_hz=2e12)
drive = np.linspace(7.84e9, 7.91e9, 15)
print("drive (GHz)   <c+c>")
for f in drive:
    print(f"{f / 1e9:10.4f}  {photon_number_vs_drive(params, f):10.3e}")

# %% Peak positions across the crossing
fields = [279.0, 280.0, 281.25, 282.5, 283.5]
ac = anticrossing(params, fields, np.linspace(7.8e9, 7.95e9, 76))
print("\nB (mT)  magnon (GHz)  lower (GHz)  upper (GHz)  gap (MHz)")
for b, lo, up, gap in zip(ac.B_mT, ac.lower_hz, ac.upper_hz, ac.splitting_hz):
    f_m = rad_to_hz(magnon_frequency(b * 1e-3))
    print(f"{b:6.2f}  {f_m / 1e9:11.4f}  {lo / 1e9:11.4f}  {up / 1e9:11.4f}  {gap / 1e6:9.3f}")

g_hz = rad_to_hz(params.g)
print(f"\nsmallest gap {ac.min_splitting_hz / 1e6:.3f} MHz at {ac.B_at_min_mT} mT; 2g = {2 * g_hz / 1e6:.3f} MHz")
