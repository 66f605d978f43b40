"""The hierarchy checked against the full master equation.

In scaled units with a few quanta per mode, the density matrix fits in a
number basis of 40 levels per mode. Integrating it directly and tracing out
moments gives an answer that shares no code with the moment generator.

Run: python3 demos/05_fock_oracle.py   (about 20 seconds)
"""
import numpy as np

from cavmag.fock import desk_params
from cavmag.moments import N_MAGNON, N_PHOTON
from cavmag.scenarios import fock_comparison

params = desk_params()
times = np.array([0.0, 0.15, 0.3])
fock, moments = fock_comparison(params, 4.0, times, cutoff=40)

print(" t     <c+c> Fock    <c+c> moments   <m+m> Fock    <m+m> moments")
for k, t in enumerate(times):
    print(
        f"{t:4.2f}  {fock[N_PHOTON][k].real:12.8f}  {moments[N_PHOTON][k].real:14.8f}"
        f"  {fock[N_MAGNON][k].real:12.8f}  {moments[N_MAGNON][k].real:14.8f}"
    )
worst = max(
    np.max(np.abs(fock[idx] - moments[idx]) / np.maximum(np.abs(moments[idx]), 1e-12))
    for idx in moments.indices
    if np.max(np.abs(moments[idx])) > 1e-12
)
print(f"\nworst relative difference over all order-2 moments: {worst:.2e}")
