"""Brute-force Lindblad integrator in a truncated number basis.

Independent of the moment hierarchy and the trajectory engine: it evolves
the full two-mode density matrix and reads moments off as traces. Only
practical at desk scale (a few quanta, cutoff ~40 per mode).

The density matrix is held as a tensor ``rho[i, j, k, l]`` with ``(i, j)``
the photon and magnon ket labels and ``(k, l)`` the bra labels, split into
real and imaginary parts and zero-padded by one level on every side. Ladder
operators act by shifting one axis, so no superoperator is ever built; the
right-hand side is one compiled pass over the tensor.
"""
from __future__ import annotations

import math
from typing import Sequence

import numba
import numpy as np
from scipy.special import gammaln

from .moments import MomentIndex, MomentSeries
from .params import SystemParams


@numba.njit(cache=True, fastmath=True)
def _lindblad_kernel(xr, xi, outr, outi, sq, dc, dm, g, Om, kc, km, n_c, n_m):
    """d rho/dt for padded real/imaginary parts. Level ``n`` sits at padded position ``n + 1``."""
    N = xr.shape[0] - 2
    ac_dn, ac_up = 2 * kc * (1 + n_c), 2 * kc * n_c
    am_dn, am_up = 2 * km * (1 + n_m), 2 * km * n_m
    rc = kc * (1 + 2 * n_c)
    rm = km * (1 + 2 * n_m)
    const = 2 * kc * n_c + 2 * km * n_m
    for I in range(1, N + 1):
        i = I - 1
        for J in range(1, N + 1):
            j = J - 1
            for K in range(1, N + 1):
                k = K - 1
                bre = -rc * (i + k) - const
                bim = -dc * (i - k)
                cu = sq[i] * sq[j + 1]
                cd = sq[j] * sq[i + 1]
                jc_dn = ac_dn * sq[i + 1] * sq[k + 1]
                jc_up = ac_up * sq[i] * sq[k]
                for L in range(1, N + 1):
                    l = L - 1
                    dre = bre - rm * (j + l)
                    dim = bim - dm * (j - l)
                    # coupling: h = (c^dag m + m^dag c) rho - rho (c^dag m + m^dag c)
                    c3 = sq[k + 1] * sq[l]
                    c4 = sq[l + 1] * sq[k]
                    hr = (
                        cu * xr[I - 1, J + 1, K, L]
                        + cd * xr[I + 1, J - 1, K, L]
                        - c3 * xr[I, J, K + 1, L - 1]
                        - c4 * xr[I, J, K - 1, L + 1]
                    )
                    hi = (
                        cu * xi[I - 1, J + 1, K, L]
                        + cd * xi[I + 1, J - 1, K, L]
                        - c3 * xi[I, J, K + 1, L - 1]
                        - c4 * xi[I, J, K - 1, L + 1]
                    )
                    # drive: c^dag rho - c rho - rho c^dag + rho c
                    pr = (
                        sq[i] * xr[I - 1, J, K, L]
                        - sq[i + 1] * xr[I + 1, J, K, L]
                        - sq[k + 1] * xr[I, J, K + 1, L]
                        + sq[k] * xr[I, J, K - 1, L]
                    )
                    pi = (
                        sq[i] * xi[I - 1, J, K, L]
                        - sq[i + 1] * xi[I + 1, J, K, L]
                        - sq[k + 1] * xi[I, J, K + 1, L]
                        + sq[k] * xi[I, J, K - 1, L]
                    )
                    jm_dn = am_dn * sq[j + 1] * sq[l + 1]
                    jm_up = am_up * sq[j] * sq[l]
                    jr = (
                        jc_dn * xr[I + 1, J, K + 1, L]
                        + jc_up * xr[I - 1, J, K - 1, L]
                        + jm_dn * xr[I, J + 1, K, L + 1]
                        + jm_up * xr[I, J - 1, K, L - 1]
                    )
                    ji = (
                        jc_dn * xi[I + 1, J, K + 1, L]
                        + jc_up * xi[I - 1, J, K - 1, L]
                        + jm_dn * xi[I, J + 1, K, L + 1]
                        + jm_up * xi[I, J - 1, K, L - 1]
                    )
                    r0 = xr[I, J, K, L]
                    i0 = xi[I, J, K, L]
                    outr[I, J, K, L] = dre * r0 - dim * i0 + g * hi + Om * pr + jr
                    outi[I, J, K, L] = dre * i0 + dim * r0 - g * hr + Om * pi + ji


@numba.njit(cache=True, fastmath=True)
def _axpy(yr, yi, a, kr, ki, outr, outi):
    n = yr.size
    yr1, yi1, kr1, ki1 = yr.reshape(n), yi.reshape(n), kr.reshape(n), ki.reshape(n)
    or1, oi1 = outr.reshape(n), outi.reshape(n)
    for p in range(n):
        or1[p] = yr1[p] + a * kr1[p]
        oi1[p] = yi1[p] + a * ki1[p]


@numba.njit(cache=True, fastmath=True)
def _rk4_combine(yr, yi, h, k1r, k1i, k2r, k2i, k3r, k3i, k4r, k4i):
    n = yr.size
    yr1, yi1 = yr.reshape(n), yi.reshape(n)
    a1, b1 = k1r.reshape(n), k1i.reshape(n)
    a2, b2 = k2r.reshape(n), k2i.reshape(n)
    a3, b3 = k3r.reshape(n), k3i.reshape(n)
    a4, b4 = k4r.reshape(n), k4i.reshape(n)
    w = h / 6.0
    for p in range(n):
        yr1[p] += w * (a1[p] + 2 * a2[p] + 2 * a3[p] + a4[p])
        yi1[p] += w * (b1[p] + 2 * b2[p] + 2 * b3[p] + b4[p])


class FockLindblad:
    """Master equation for the driven, damped photon-magnon pair in the frame rotating at the drive.

    Time stepping is classical fixed-step RK4. The generator's spectrum lies
    in the closed left half-plane, inside a Gershgorin disk of radius
    :meth:`rate_bound`; RK4 is stable on the left half-disk of radius 2.5,
    which sets the default step.
    """

    def __init__(self, params: SystemParams, cutoff: int = 40):
        self.params = params
        self.cutoff = cutoff
        bath = params.bath()
        self.n_c, self.n_m = bath.n_c, bath.n_m
        self._n = np.arange(cutoff, dtype=float)
        self._sq = np.sqrt(np.arange(cutoff + 1, dtype=float))
        p = params
        self._args = (
            p.omega_c - p.omega_0,
            p.omega_m - p.omega_0,
            p.g,
            p.Omega,
            p.kappa_c,
            p.kappa_m,
            self.n_c,
            self.n_m,
        )

    def rate_bound(self) -> float:
        """Gershgorin bound on the spectral radius of the truncated generator."""
        p = self.params
        N = self.cutoff
        dc, dm = abs(p.omega_c - p.omega_0), abs(p.omega_m - p.omega_0)
        diag = (
            p.kappa_c * (1 + 2 * self.n_c) * 2 * N
            + p.kappa_m * (1 + 2 * self.n_m) * 2 * N
            + 2 * p.kappa_c * self.n_c
            + 2 * p.kappa_m * self.n_m
            + (dc + dm) * N
        )
        off = 4 * p.g * N + 4 * p.Omega * math.sqrt(N) + 2 * (
            p.kappa_c * (1 + 2 * self.n_c) + p.kappa_m * (1 + 2 * self.n_m)
        ) * N
        return diag + off

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        """Time derivative of a complex density tensor of shape ``(cutoff,) * 4``."""
        xr, xi = np.pad(rho.real, 1), np.pad(rho.imag, 1)
        outr, outi = np.zeros_like(xr), np.zeros_like(xi)
        _lindblad_kernel(xr, xi, outr, outi, self._sq, *self._args)
        s = slice(1, -1)
        return outr[s, s, s, s] + 1j * outi[s, s, s, s]

    def initial_state(self, n_inject: float, n_m: float | None = None) -> np.ndarray:
        """Coherent photon (real amplitude) times thermal magnon, truncated and renormalised."""
        if n_m is None:
            n_m = self.n_m
        n = self._n
        amp = math.sqrt(n_inject)
        if amp > 0:
            psi = np.exp(-0.5 * n_inject + n * math.log(amp) - 0.5 * gammaln(n + 1))
        else:
            psi = (n == 0).astype(float)
        psi /= np.linalg.norm(psi)
        if n_m > 0:
            pth = (n_m / (1 + n_m)) ** n / (1 + n_m)
        else:
            pth = (n == 0).astype(float)
        pth /= pth.sum()
        rho = np.einsum("ik,j,jl->ijkl", np.outer(psi, psi), pth, np.eye(self.cutoff))
        return rho.astype(complex)

    def moment(self, rho: np.ndarray, idx: MomentIndex) -> complex:
        """Tr(rho c^dag^p c^q m^dag^r m^s)."""
        p, q, r, s = idx
        a = np.diag(np.sqrt(np.arange(1, self.cutoff)), 1)
        A = np.linalg.matrix_power(a.T, p) @ np.linalg.matrix_power(a, q)
        B = np.linalg.matrix_power(a.T, r) @ np.linalg.matrix_power(a, s)
        return complex(np.einsum("ijkl,ki,lj->", rho, A, B))

    def evolve(
        self,
        rho0: np.ndarray,
        times: Sequence[float],
        indices: Sequence[MomentIndex],
        dt: float | None = None,
    ) -> MomentSeries:
        """Integrate from t=0 and return the requested moments at ``times``."""
        times = np.asarray(times, dtype=float)
        if times[0] < 0 or np.any(np.diff(times) < 0):
            raise ValueError("times must be non-negative and sorted")
        h_max = 2.5 / self.rate_bound() if dt is None else dt
        yr, yi = np.pad(rho0.real, 1), np.pad(rho0.imag, 1)
        ks = [np.zeros_like(yr) for _ in range(8)]
        tr, ti = np.zeros_like(yr), np.zeros_like(yr)
        sq, args = self._sq, self._args
        s = slice(1, -1)
        vals = np.empty((len(times), len(indices)), dtype=complex)
        t = 0.0
        self.n_steps = 0
        for kt, t_out in enumerate(times):
            span = t_out - t
            n_sub = int(math.ceil(span / h_max - 1e-12)) if span > 0 else 0
            for _ in range(n_sub):
                h = span / n_sub
                k1r, k1i, k2r, k2i, k3r, k3i, k4r, k4i = ks
                _lindblad_kernel(yr, yi, k1r, k1i, sq, *args)
                _axpy(yr, yi, 0.5 * h, k1r, k1i, tr, ti)
                _lindblad_kernel(tr, ti, k2r, k2i, sq, *args)
                _axpy(yr, yi, 0.5 * h, k2r, k2i, tr, ti)
                _lindblad_kernel(tr, ti, k3r, k3i, sq, *args)
                _axpy(yr, yi, h, k3r, k3i, tr, ti)
                _lindblad_kernel(tr, ti, k4r, k4i, sq, *args)
                _rk4_combine(yr, yi, h, k1r, k1i, k2r, k2i, k3r, k3i, k4r, k4i)
                self.n_steps += 1
            t = t_out
            rho = yr[s, s, s, s] + 1j * yi[s, s, s, s]
            for i, idx in enumerate(indices):
                vals[kt, i] = self.moment(rho, idx)
        self.final_state = rho
        return MomentSeries(tuple(indices), times, vals)

    def tail_weight(self, rho: np.ndarray, margin: int = 5) -> float:
        """Population within ``margin`` levels of the cutoff in either mode (truncation diagnostic)."""
        diag = np.einsum("ijij->ij", rho).real
        return float(diag[-margin:, :].sum() + diag[:, -margin:].sum())


def desk_params() -> SystemParams:
    """Scaled parameters for oracle runs: rates of order one, a few quanta per mode."""
    return SystemParams(
        omega_c=10.3,
        omega_m=9.8,
        g=0.8,
        kappa_c=0.3,
        kappa_m=0.2,
        Omega=0.5,
        omega_0=10.0,
        n_thermal=(1.0, 2.0),
    )
