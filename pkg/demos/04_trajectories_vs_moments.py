"""Stochastic trajectories against the exact moment equations.

Each trajectory is one sample of the Glauber-Sudarshan P-function. The
ensemble mean of |alpha|^2 must agree with <c+c> from the hierarchy within
its standard error, and the photon g2 swings between coherent and thermal
values as the pulse sloshes back and forth.

Run: python3 demos/04_trajectories_vs_moments.py   (under ten seconds)
"""
import numpy as np

from cavmag import (
    EnsembleConfig,
    InitialSpec,
    build_system,
    g2_estimates,
    initial_coherent_thermal,
    integrate,
    reference_params,
    run_ensemble,
)
from cavmag.moments import N_PHOTON
from cavmag.trajectories import DEFAULT_MOMENTS

params = reference_params()
times = tuple(np.linspace(0.0, 200e-9, 11))
n0 = 1e4

# %% Ensemble of 2000 trajectories, 10 ps steps
cfg = EnsembleConfig(2000, 1e-11, 7, times)
est = run_ensemble(cfg, params, InitialSpec(n0), DEFAULT_MOMENTS)
g2 = g2_estimates(est)
mean, se = est[N_PHOTON]

# %% Reference from the order-4 hierarchy
ref = integrate(build_system(params, 4), initial_coherent_thermal(n0, params.bath(), 4), (0.0, times[-1]), times=times)

print(" t (ns)   ensemble <c+c>        moments   z-score   g2 ens   g2 moments")
for k, t in enumerate(times):
    # the photon starts in the same coherent state on every trajectory, so t = 0 has no spread
    z = f"{(mean[k].real - ref.n_photon[k]) / se[k]:8.2f}" if se[k] > 0 else "   exact"
    print(f"{t * 1e9:7.1f}  {mean[k].real:9.1f} +- {se[k]:6.1f}  {ref.n_photon[k]:9.1f}  {z}  {g2.g2_photon[k]:7.3f}  {ref.g2_photon[k]:7.3f}")
