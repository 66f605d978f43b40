"""Stochastic trajectories of the Glauber-Sudarshan P-function.

Each trajectory is a pair of complex amplitudes ``(alpha, beta)`` obeying a
linear SDE with additive complex Wiener noise. Ensemble averages of
``conj(alpha)^p alpha^q conj(beta)^r beta^s`` estimate the normally ordered
moments. Everything runs in the frame rotating at the drive frequency.

Reproducibility: trajectory ``k`` draws all its normals from its own Philox
stream seeded by ``SeedSequence(master_seed, spawn_key=(k,))``. Trajectories
are grouped in chunks of fixed size and the per-chunk statistics are merged
in chunk order, so results do not depend on the number of worker processes.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .moments import MAGNON_PAIRS, N_MAGNON, N_PHOTON, PHOTON_PAIRS, MomentIndex
from .params import BathOccupations, SystemParams

SCHEMES = ("euler_maruyama", "exact_gaussian")
GAUSSIAN_METHOD = "numpy.random.Generator(Philox).standard_normal (ziggurat)"
DEFAULT_MOMENTS: tuple[MomentIndex, ...] = (N_PHOTON, PHOTON_PAIRS, N_MAGNON, MAGNON_PAIRS)
CHUNK_SIZE = 1024
_NOISE_BLOCK = 256


class NonFiniteStateError(FloatingPointError):
    def __init__(self, trajectory: int, t: float):
        super().__init__(f"trajectory {trajectory} diverged before t={t:.6g}")
        self.trajectory = trajectory
        self.t = t


@dataclass(frozen=True)
class TrajectoryState:
    alpha: complex
    beta: complex
    t: float = 0.0


@dataclass(frozen=True)
class InitialSpec:
    """Coherent photon amplitude sqrt(n_inject) and a thermal magnon.

    ``bath`` defaults to the parameters' own bath occupations.
    """

    n_inject: float = 0.0
    bath: BathOccupations | None = None
    cavity_thermal: bool = False


@dataclass(frozen=True)
class EnsembleConfig:
    n_traj: int
    dt: float
    master_seed: int
    output_times: tuple[float, ...]
    scheme: str = "euler_maruyama"
    workers: int = 1
    chunk_size: int = CHUNK_SIZE

    def __post_init__(self):
        object.__setattr__(self, "output_times", tuple(float(t) for t in self.output_times))
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        ts = np.asarray(self.output_times)
        if ts.size == 0 or ts[0] < 0 or np.any(np.diff(ts) <= 0):
            raise ValueError("output_times must be non-negative and strictly increasing")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if self.workers < 1 or self.chunk_size < 1:
            raise ValueError("workers and chunk_size must be >= 1")
        self.step_counts()

    def step_counts(self) -> np.ndarray:
        """Number of steps from t=0 to each output time; output times must sit on the dt grid."""
        ts = np.asarray(self.output_times)
        n = np.rint(ts / self.dt).astype(np.int64)
        if np.any(np.abs(n * self.dt - ts) > 1e-6 * self.dt):
            raise ValueError("output_times must be integer multiples of dt")
        return n


@dataclass
class EnsembleEstimate:
    times: np.ndarray
    indices: tuple[MomentIndex, ...]
    mean: np.ndarray
    standard_error: np.ndarray
    n_traj: int
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, idx: MomentIndex) -> tuple[np.ndarray, np.ndarray]:
        i = self.indices.index(idx)
        return self.mean[:, i], self.standard_error[:, i]


@dataclass
class G2Series:
    times: np.ndarray
    g2_photon: np.ndarray
    err_photon: np.ndarray
    g2_magnon: np.ndarray
    err_magnon: np.ndarray
    reliable_photon: np.ndarray
    reliable_magnon: np.ndarray


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=(index,))))


def sample_initial(
    n_inject: float, bath: BathOccupations, rng: np.random.Generator, cavity_thermal: bool = False
) -> TrajectoryState:
    """Coherent photon with real amplitude, magnon drawn from its thermal P-function.

    The thermal P-function is a circular Gaussian with ``<|beta|^2> = n_m``.
    With ``cavity_thermal`` the photon amplitude gets the same kind of
    Gaussian spread with ``n_c``; its draws come after the magnon's so the
    default stream is unchanged.
    """
    if n_inject < 0:
        raise ValueError("n_inject must be non-negative")
    z = rng.standard_normal(2)
    beta = math.sqrt(bath.n_m / 2.0) * complex(z[0], z[1])
    alpha = complex(math.sqrt(n_inject))
    if cavity_thermal:
        w = rng.standard_normal(2)
        alpha += math.sqrt(bath.n_c / 2.0) * complex(w[0], w[1])
    return TrajectoryState(alpha, beta, 0.0)


def _drift_coefficients(params: SystemParams):
    lam_c = 1j * (params.omega_c - params.omega_0) + params.kappa_c
    lam_m = 1j * (params.omega_m - params.omega_0) + params.kappa_m
    return lam_c, lam_m


def step(state: TrajectoryState, params: SystemParams, dt: float, noise: Sequence[float]) -> TrajectoryState:
    """One Euler-Maruyama step; ``noise`` holds four standard normal draws."""
    bath = params.bath()
    lam_c, lam_m = _drift_coefficients(params)
    z1, z2, z3, z4 = noise
    a, b = state.alpha, state.beta
    a_new = a + (-lam_c * a - 1j * params.g * b + params.Omega) * dt
    a_new += math.sqrt(params.kappa_c * bath.n_c * dt) * complex(z1, z2)
    b_new = b + (-lam_m * b - 1j * params.g * a) * dt
    b_new += math.sqrt(params.kappa_m * bath.n_m * dt) * complex(z3, z4)
    if not (np.isfinite(a_new) and np.isfinite(b_new)):
        raise NonFiniteStateError(0, state.t + dt)
    return TrajectoryState(complex(a_new), complex(b_new), state.t + dt)


class _Propagator:
    """Linear one-step map ``x -> T x + u + L z`` for a complex 2-vector x and noise pair z."""

    def __init__(self, params: SystemParams, dt: float, scheme: str):
        bath = params.bath()
        lam_c, lam_m = _drift_coefficients(params)
        A = np.array([[-lam_c, -1j * params.g], [-1j * params.g, -lam_m]])
        b = np.array([params.Omega, 0.0], dtype=complex)
        if scheme == "euler_maruyama":
            self.T = np.eye(2) + A * dt
            self.u = b * dt
            # z = z1 + i z2 with unit-variance real parts
            self.L = np.diag([math.sqrt(params.kappa_c * bath.n_c * dt), math.sqrt(params.kappa_m * bath.n_m * dt)])
        else:
            Phi = sla.expm(A * dt)
            self.T = Phi
            self.u = np.linalg.solve(A, (Phi - np.eye(2)) @ b)
            D = np.diag([2.0 * params.kappa_c * bath.n_c, 2.0 * params.kappa_m * bath.n_m]).astype(complex)
            # stationary covariance P solves A P + P A^H + D = 0; step covariance is P - Phi P Phi^H
            P = sla.solve_continuous_lyapunov(A, -D)
            Q = P - Phi @ P @ Phi.conj().T
            Q = 0.5 * (Q + Q.conj().T)
            w, V = np.linalg.eigh(Q)
            # noise z has E|z|^2 = 2, so scale by 1/sqrt(2)
            self.L = V @ np.diag(np.sqrt(np.clip(w, 0.0, None) / 2.0))
        self.diagonal_noise = np.count_nonzero(self.L - np.diag(np.diag(self.L))) == 0

    def advance(self, a, b, z):
        T, u, L = self.T, self.u, self.L
        a_new = T[0, 0] * a + T[0, 1] * b + u[0]
        b_new = T[1, 0] * a + T[1, 1] * b + u[1]
        if self.diagonal_noise:
            a_new += L[0, 0] * z[:, 0]
            b_new += L[1, 1] * z[:, 1]
        else:
            a_new += L[0, 0] * z[:, 0] + L[0, 1] * z[:, 1]
            b_new += L[1, 0] * z[:, 0] + L[1, 1] * z[:, 1]
        return a_new, b_new


def _observables(a, b, indices):
    ca, cb = np.conj(a), np.conj(b)
    out = np.empty((len(indices), a.size), dtype=complex)
    for i, (p, q, r, s) in enumerate(indices):
        out[i] = ca**p * a**q * cb**r * b**s
    return out


def _chunk_stats(obs):
    """Mean and centred sums of squares, shifted by the first sample so identical samples give exactly zero spread."""
    shift = obs[:, :1]
    dev = obs - shift
    mdev = dev.mean(axis=1)
    resid = dev - mdev[:, None]
    return shift[:, 0] + mdev, np.sum(resid.real**2, axis=1), np.sum(resid.imag**2, axis=1)


def _run_chunk(args):
    (chunk, params, initial, config, indices, dump_count) = args
    start = chunk * config.chunk_size
    stop = min(start + config.chunk_size, config.n_traj)
    n = stop - start
    bath = initial.bath if initial.bath is not None else params.bath()
    prop = _Propagator(params, config.dt, config.scheme)
    rngs = [trajectory_rng(config.master_seed, k) for k in range(start, stop)]

    a = np.empty(n, dtype=complex)
    b = np.empty(n, dtype=complex)
    for j, rng in enumerate(rngs):
        s = sample_initial(initial.n_inject, bath, rng, initial.cavity_thermal)
        a[j], b[j] = s.alpha, s.beta

    counts = config.step_counts()
    n_out = len(counts)
    means = np.empty((n_out, len(indices)), dtype=complex)
    m2re = np.empty((n_out, len(indices)))
    m2im = np.empty((n_out, len(indices)))
    dump_rows = []
    n_dump = max(0, min(dump_count - start, n))

    done = 0
    noise = None
    used = _NOISE_BLOCK
    for k, target in enumerate(counts):
        # divergence is detected and reported at the output time below
        with np.errstate(over="ignore", invalid="ignore"):
            while done < target:
                if used == _NOISE_BLOCK:
                    # (block, n, 2) complex: [z1 + i z2, z3 + i z4] per step and trajectory
                    noise = np.stack(
                        [rng.standard_normal((_NOISE_BLOCK, 4)).view(complex) for rng in rngs], axis=1
                    )
                    used = 0
                a, b = prop.advance(a, b, noise[used])
                used += 1
                done += 1
        bad = ~(np.isfinite(a) & np.isfinite(b))
        if bad.any():
            raise NonFiniteStateError(start + int(np.argmax(bad)), config.output_times[k])
        means[k], m2re[k], m2im[k] = _chunk_stats(_observables(a, b, indices))
        for j in range(n_dump):
            dump_rows.append((config.output_times[k], start + j, a[j].real, a[j].imag, b[j].real, b[j].imag))
    return n, means, m2re, m2im, dump_rows


def _merge(acc, part):
    """Chan et al. pairwise combination of (count, mean, M2_re, M2_im)."""
    if acc is None:
        return part
    na, ma, ra, ia = acc
    nb, mb, rb, ib = part
    n = na + nb
    delta = mb - ma
    mean = ma + delta * (nb / n)
    w = na * nb / n
    return n, mean, ra + rb + delta.real**2 * w, ia + ib + delta.imag**2 * w


def run_ensemble(
    config: EnsembleConfig,
    params: SystemParams,
    initial: InitialSpec = InitialSpec(),
    requested_moments: Sequence[MomentIndex] = DEFAULT_MOMENTS,
    dump_path: str | None = None,
    dump_count: int = 10,
) -> EnsembleEstimate:
    """Run ``config.n_traj`` trajectories and estimate the requested moments at each output time.

    The standard error of a complex observable is the root-sum-square of the
    standard errors of its real and imaginary parts.
    """
    indices = tuple(tuple(int(x) for x in idx) for idx in requested_moments)
    n_chunks = -(-config.n_traj // config.chunk_size)
    if dump_path is None:
        dump_count = 0
    jobs = [(c, params, initial, config, indices, dump_count) for c in range(n_chunks)]
    if config.workers > 1 and n_chunks > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(job) for job in jobs]

    acc = None
    dump_rows = []
    for n, mean, r, i, rows in parts:
        acc = _merge(acc, (n, mean, r, i))
        dump_rows.extend(rows)
    n, mean, m2re, m2im = acc
    if n > 1:
        se = np.sqrt((m2re + m2im) / (n - 1) / n)
    else:
        se = np.zeros_like(m2re)

    if dump_path is not None:
        dump_rows.sort(key=lambda row: (row[1], row[0]))
        with open(dump_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["traj", "t", "re_alpha", "im_alpha", "re_beta", "im_beta"])
            for t, k, ar, ai, br, bi in dump_rows:
                w.writerow([k, repr(t), repr(ar), repr(ai), repr(br), repr(bi)])

    meta = {
        "n_traj": config.n_traj,
        "dt": config.dt,
        "master_seed": config.master_seed,
        "scheme": config.scheme,
        "chunk_size": config.chunk_size,
        "gaussian_method": GAUSSIAN_METHOD,
        "stream": "SeedSequence(master_seed, spawn_key=(trajectory,)) -> Philox",
        "numpy_version": np.__version__,
    }
    return EnsembleEstimate(np.asarray(config.output_times), indices, mean, se, n, meta)


def g2_estimates(est: EnsembleEstimate) -> G2Series:
    """Ratio estimates of g2 for photons and magnons with first-order error propagation.

    Covariance between numerator and denominator is ignored, which
    overestimates the error for these positively correlated estimators.
    Times where the occupation is below three standard errors are flagged
    as unreliable.
    """
    missing = [i for i in DEFAULT_MOMENTS if i not in est.indices]
    if missing:
        raise KeyError(f"estimate lacks moments {missing}")

    def ratio(pairs_idx, n_idx):
        num, snum = est[pairs_idx]
        den, sden = est[n_idx]
        num, den = num.real, den.real
        with np.errstate(divide="ignore", invalid="ignore"):
            g2 = num / den**2
            err = np.sqrt((snum / den**2) ** 2 + (2.0 * num * sden / den**3) ** 2)
        return g2, err, den > 3.0 * sden

    gp, ep, rp = ratio(PHOTON_PAIRS, N_PHOTON)
    gm, em, rm = ratio(MAGNON_PAIRS, N_MAGNON)
    return G2Series(est.times, gp, ep, gm, em, rp, rm)
