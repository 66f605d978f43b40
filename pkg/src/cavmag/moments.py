"""Hierarchy of equations for normally ordered moments <c+^p c^q m+^r m^s>.

The generator is linear and closes exactly at every total order, so the
moments up to order N obey a finite linear ODE system. In the frame rotating
at the drive frequency the system is autonomous.

Index ``(p, q, r, s)`` labels ``<c+^p c^q m+^r m^s>``; ``(0, 1, 0, 0)`` is
``<c>`` and ``(1, 0, 0, 0)`` is ``<c+>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterator, Sequence, TextIO

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .params import BathOccupations, SystemParams

MomentIndex = tuple[int, int, int, int]

ONE: MomentIndex = (0, 0, 0, 0)
C: MomentIndex = (0, 1, 0, 0)
M: MomentIndex = (0, 0, 0, 1)
N_PHOTON: MomentIndex = (1, 1, 0, 0)
N_MAGNON: MomentIndex = (0, 0, 1, 1)
PHOTON_PAIRS: MomentIndex = (2, 2, 0, 0)
MAGNON_PAIRS: MomentIndex = (0, 0, 2, 2)

# term kinds in the cached structure
_COUPLING, _DRIVE_PLUS, _DRIVE_MINUS, _THERMAL_C, _THERMAL_M = range(5)


class IntegrationError(RuntimeError):
    pass


class SingularBlockError(np.linalg.LinAlgError):
    pass


def order_of(idx: MomentIndex) -> int:
    return sum(idx)


def moment_indices(max_order: int) -> tuple[MomentIndex, ...]:
    """All indices with total order <= max_order: ascending order, then lexicographic."""
    out = []
    for n in range(max_order + 1):
        block = [
            (p, q, r, n - p - q - r)
            for p in range(n + 1)
            for q in range(n + 1 - p)
            for r in range(n + 1 - p - q)
        ]
        out.extend(sorted(block))
    return tuple(out)


def conjugate_index(idx: MomentIndex) -> MomentIndex:
    p, q, r, s = idx
    return (q, p, s, r)


@lru_cache(maxsize=None)
def _structure(max_order: int):
    """Sparsity pattern of the generator; coefficients are filled in per parameter set."""
    indices = moment_indices(max_order)
    pos = {idx: i for i, idx in enumerate(indices)}
    rows, cols, kinds, mult = [], [], [], []

    def add(row, target, kind, k):
        if k == 0 or min(target) < 0:
            return
        rows.append(row)
        cols.append(pos[target])
        kinds.append(kind)
        mult.append(k)

    for i, (p, q, r, s) in enumerate(indices):
        add(i, (p - 1, q, r + 1, s), _COUPLING, p)
        add(i, (p, q - 1, r, s + 1), _COUPLING, -q)
        add(i, (p + 1, q, r - 1, s), _COUPLING, r)
        add(i, (p, q + 1, r, s - 1), _COUPLING, -s)
        add(i, (p - 1, q, r, s), _DRIVE_PLUS, p)
        add(i, (p, q - 1, r, s), _DRIVE_MINUS, q)
        add(i, (p - 1, q - 1, r, s), _THERMAL_C, 2 * p * q)
        add(i, (p, q, r - 1, s - 1), _THERMAL_M, 2 * r * s)

    arr = np.array(indices, dtype=float).reshape(-1, 4)
    diag = {
        "dc": arr[:, 0] - arr[:, 1],
        "sc": arr[:, 0] + arr[:, 1],
        "dm": arr[:, 2] - arr[:, 3],
        "sm": arr[:, 2] + arr[:, 3],
    }
    orders = arr.sum(axis=1).astype(int)
    bounds = np.searchsorted(orders, np.arange(max_order + 2))
    return (
        indices,
        pos,
        np.array(rows, dtype=np.intp),
        np.array(cols, dtype=np.intp),
        np.array(kinds, dtype=np.intp),
        np.array(mult, dtype=float),
        diag,
        bounds,
    )


@dataclass(frozen=True)
class MomentSystem:
    """Linear generator ``d/dt y = (matrix + e^{i d t} drive_plus + e^{-i d t} drive_minus) y``.

    ``d = omega_0 - frame`` vanishes in the frame co-rotating with the drive,
    which makes the system autonomous.
    """

    order: int
    indices: tuple[MomentIndex, ...]
    matrix: sp.csr_matrix
    drive_plus: sp.csr_matrix
    drive_minus: sp.csr_matrix
    frame: float
    drive_detuning: float
    params: SystemParams
    position: dict = field(repr=False, compare=False)
    block_bounds: np.ndarray = field(repr=False, compare=False)

    def __len__(self):
        return len(self.indices)

    @property
    def autonomous(self) -> bool:
        return self.drive_detuning == 0.0 or self.params.Omega == 0.0

    def generator(self, t: float = 0.0) -> sp.csr_matrix:
        if self.autonomous:
            return (self.matrix + self.drive_plus + self.drive_minus).tocsr()
        ph = np.exp(1j * self.drive_detuning * t)
        return (self.matrix + ph * self.drive_plus + np.conj(ph) * self.drive_minus).tocsr()

    def block(self, order: int) -> slice:
        return slice(int(self.block_bounds[order]), int(self.block_bounds[order + 1]))

    def truncated(self, order: int) -> "MomentSystem":
        """Sub-system of orders <= ``order``; exact because the hierarchy is lower triangular."""
        if not 0 <= order <= self.order:
            raise ValueError("truncation order out of range")
        n = int(self.block_bounds[order + 1])
        return replace(
            self,
            order=order,
            indices=self.indices[:n],
            matrix=self.matrix[:n, :n].tocsr(),
            drive_plus=self.drive_plus[:n, :n].tocsr(),
            drive_minus=self.drive_minus[:n, :n].tocsr(),
            position={k: v for k, v in self.position.items() if v < n},
            block_bounds=self.block_bounds[: order + 2],
        )

    def with_flipped_coefficient(self, row: MomentIndex, col: MomentIndex) -> "MomentSystem":
        """Copy with one generator coefficient negated. Mutation-testing hook only."""
        i, j = self.position[row], self.position[col]
        mats = {}
        for name in ("matrix", "drive_plus", "drive_minus"):
            m = getattr(self, name).tolil(copy=True)
            m[i, j] = -m[i, j]
            mats[name] = m.tocsr()
        if all(getattr(self, k)[i, j] == 0 for k in mats):
            raise ValueError(f"no coefficient at ({row}, {col})")
        return replace(self, **mats)


def build_system(params: SystemParams, max_order: int, frame_freq: float | None = None) -> MomentSystem:
    """Assemble the moment generator up to ``max_order``.

    ``frame_freq`` defaults to the drive frequency ``params.omega_0``. Pass
    ``0.0`` for the laboratory frame (debugging only: the carrier makes the
    system stiff and, with a drive, time dependent).
    """
    if max_order < 1:
        raise ValueError(f"max_order must be >= 1, got {max_order}")
    if frame_freq is None:
        frame_freq = params.omega_0
    indices, pos, rows, cols, kinds, mult, diag, bounds = _structure(max_order)
    bath = params.bath()
    dwc = params.omega_c - frame_freq
    dwm = params.omega_m - frame_freq
    n = len(indices)

    coeff = np.empty(len(rows), dtype=complex)
    sel = kinds == _COUPLING
    coeff[sel] = 1j * params.g * mult[sel]
    sel = (kinds == _DRIVE_PLUS) | (kinds == _DRIVE_MINUS)
    coeff[sel] = params.Omega * mult[sel]
    sel = kinds == _THERMAL_C
    coeff[sel] = params.kappa_c * bath.n_c * mult[sel]
    sel = kinds == _THERMAL_M
    coeff[sel] = params.kappa_m * bath.n_m * mult[sel]

    d = (
        1j * diag["dc"] * dwc
        - params.kappa_c * diag["sc"]
        + 1j * diag["dm"] * dwm
        - params.kappa_m * diag["sm"]
    )
    static = (kinds != _DRIVE_PLUS) & (kinds != _DRIVE_MINUS)
    matrix = sp.coo_matrix((coeff[static], (rows[static], cols[static])), shape=(n, n)).tocsr()
    matrix = (matrix + sp.diags(d)).tocsr()
    matrix.eliminate_zeros()

    def drive(kind):
        s = kinds == kind
        return sp.coo_matrix((coeff[s], (rows[s], cols[s])), shape=(n, n)).tocsr()

    return MomentSystem(
        order=max_order,
        indices=indices,
        matrix=matrix,
        drive_plus=drive(_DRIVE_PLUS),
        drive_minus=drive(_DRIVE_MINUS),
        frame=float(frame_freq),
        drive_detuning=float(params.omega_0 - frame_freq),
        params=params,
        position=pos,
        block_bounds=bounds,
    )


@dataclass
class MomentVector:
    indices: tuple[MomentIndex, ...]
    values: np.ndarray
    time: float = 0.0

    def __getitem__(self, idx: MomentIndex) -> complex:
        return complex(self.values[self.indices.index(idx)])

    def as_dict(self) -> dict:
        return dict(zip(self.indices, self.values))

    @property
    def n_photon(self) -> float:
        return self[N_PHOTON].real

    @property
    def n_magnon(self) -> float:
        return self[N_MAGNON].real

    @property
    def g2_photon(self) -> float:
        # undefined (nan) for an empty mode
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(np.float64(self[PHOTON_PAIRS].real) / np.float64(self[N_PHOTON].real) ** 2)

    @property
    def g2_magnon(self) -> float:
        # undefined (nan) for an empty mode
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(np.float64(self[MAGNON_PAIRS].real) / np.float64(self[N_MAGNON].real) ** 2)

    def conjugation_error(self) -> float:
        """Largest relative violation of value(p,q,r,s) = conj(value(q,p,s,r))."""
        pos = {idx: i for i, idx in enumerate(self.indices)}
        perm = np.array([pos[conjugate_index(i)] for i in self.indices])
        diff = np.abs(self.values - np.conj(self.values[perm]))
        scale = np.maximum(np.abs(self.values), np.abs(self.values[perm]))
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(scale > 0, diff / scale, 0.0)
        return float(rel.max())


@dataclass
class MomentSeries:
    """Moments on a time grid; ``values[k, i]`` is moment ``indices[i]`` at ``times[k]``."""

    indices: tuple[MomentIndex, ...]
    times: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.times)

    def __iter__(self) -> Iterator[MomentVector]:
        for k, t in enumerate(self.times):
            yield MomentVector(self.indices, self.values[k], float(t))

    def __getitem__(self, idx: MomentIndex) -> np.ndarray:
        return self.values[:, self.indices.index(idx)]

    @property
    def n_photon(self) -> np.ndarray:
        return self[N_PHOTON].real

    @property
    def n_magnon(self) -> np.ndarray:
        return self[N_MAGNON].real

    @property
    def g2_photon(self) -> np.ndarray:
        # undefined (nan) for an empty mode
        with np.errstate(divide="ignore", invalid="ignore"):
            return self[PHOTON_PAIRS].real / self[N_PHOTON].real ** 2

    @property
    def g2_magnon(self) -> np.ndarray:
        # undefined (nan) for an empty mode
        with np.errstate(divide="ignore", invalid="ignore"):
            return self[MAGNON_PAIRS].real / self[N_MAGNON].real ** 2


def _block_scales(system: MomentSystem, y0: np.ndarray) -> np.ndarray:
    scales = np.empty(len(y0))
    ref = None
    if system.autonomous:
        try:
            ref = steady_state(system).values
        except (SingularBlockError, np.linalg.LinAlgError):
            ref = None
    for k in range(system.order + 1):
        b = system.block(k)
        s = np.abs(y0[b]).max(initial=0.0)
        if ref is not None:
            s = max(s, np.abs(ref[b]).max(initial=0.0))
        scales[b] = s if s > 0 else 1.0
    return scales


def integrate(
    system: MomentSystem,
    initial: MomentVector,
    t_span: tuple[float, float],
    dt_max: float = np.inf,
    times: Sequence[float] | None = None,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    method: str = "RK45",
) -> MomentSeries:
    """Integrate the moment equations with an adaptive explicit Runge-Kutta scheme.

    ``atol`` is relative to the largest magnitude each order block reaches
    at the start or in the stationary state, so that blocks spanning very
    different magnitudes (order 4 with 1e8 photons is ~1e32) are all
    resolved.
    """
    if initial.indices != system.indices:
        raise ValueError("initial vector does not match the system's moment indices")
    y0 = np.asarray(initial.values, dtype=complex)
    if y0[0] != 1.0:
        raise ValueError("normalisation <1> must equal 1")
    t0, t1 = map(float, t_span)
    t_eval = None if times is None else np.asarray(times, dtype=float)
    if t_eval is not None and t_eval.size:
        t0, t1 = min(t0, t_eval.min()), max(t1, t_eval.max())
    atol_vec = atol * _block_scales(system, y0)

    if system.autonomous:
        G = system.generator()

        def rhs(t, y):
            return G @ y

    else:
        A, Dp, Dm, d = system.matrix, system.drive_plus, system.drive_minus, system.drive_detuning

        def rhs(t, y):
            ph = np.exp(1j * d * t)
            return A @ y + ph * (Dp @ y) + np.conj(ph) * (Dm @ y)

    sol = solve_ivp(
        rhs, (t0, t1), y0, method=method, t_eval=t_eval, rtol=rtol, atol=atol_vec, max_step=dt_max
    )
    if sol.status != 0:
        raise IntegrationError(sol.message)
    values = sol.y.T.copy()
    values[:, 0] = 1.0
    return MomentSeries(system.indices, sol.t, values)


def steady_state(system: MomentSystem) -> MomentVector:
    """Stationary moments, solved order block by order block.

    Each block's stationary equation is linear once the lower blocks are
    known, and its diagonal block is invertible whenever both damping rates
    are positive.
    """
    if not system.autonomous:
        raise ValueError("steady state requires the frame co-rotating with the drive")
    G = system.generator().tocsr()
    n = len(system)
    y = np.zeros(n, dtype=complex)
    y[0] = 1.0
    for k in range(1, system.order + 1):
        b = system.block(k)
        rows = G[b]
        Akk = rows[:, b].toarray()
        rhs = -(rows[:, : b.start] @ y[: b.start])
        try:
            xk = np.linalg.solve(Akk, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularBlockError(f"order-{k} block is singular") from exc
        if not np.all(np.isfinite(xk)):
            raise SingularBlockError(f"order-{k} block solve produced non-finite values")
        y[b] = xk
    # normwise per order block: a row-wise test would flag round-off in
    # entries many decades below the block's largest moment
    resid = np.abs(G @ y)
    scale = abs(G) @ np.abs(y)
    rel = 0.0
    for k in range(1, system.order + 1):
        b = system.block(k)
        s = scale[b].max(initial=0.0)
        if s > 0:
            rel = max(rel, resid[b].max() / s)
    if rel > 1e-10:
        raise SingularBlockError(f"steady-state residual {rel:.3g} exceeds 1e-10")
    return MomentVector(system.indices, y, math.inf)


def _displaced_thermal(amp: float, n: float, p: int, q: int) -> float:
    """``<a+^p a^q>`` for a thermal state of occupation ``n`` displaced by the real amplitude ``amp``."""
    return sum(
        math.comb(p, k) * math.comb(q, k) * math.factorial(k) * n**k * amp ** (p + q - 2 * k)
        for k in range(min(p, q) + 1)
    )


def initial_coherent_thermal(
    n_inject: float,
    bath: BathOccupations,
    max_order: int,
    indices: Sequence[MomentIndex] | None = None,
    cavity_thermal: bool = False,
) -> MomentVector:
    """Photon in a coherent state of real amplitude sqrt(n_inject), magnon thermal.

    ``<c+^p c^q m+^r m^s> = sqrt(n)^(p+q) * delta_rs * r! * n_m^r``. With
    ``cavity_thermal`` the pulse displaces a cavity already at its bath
    occupation ``n_c`` instead of the vacuum.
    """
    if n_inject < 0:
        raise ValueError("n_inject must be non-negative")
    if indices is None:
        indices = moment_indices(max_order)
    amp = math.sqrt(n_inject)
    n_c = bath.n_c if cavity_thermal else 0.0
    vals = np.zeros(len(indices), dtype=complex)
    for i, (p, q, r, s) in enumerate(indices):
        if r == s:
            vals[i] = _displaced_thermal(amp, n_c, p, q) * math.factorial(r) * bath.n_m ** r
    return MomentVector(tuple(indices), vals, 0.0)


def dump_generator(system: MomentSystem, out: TextIO, t: float = 0.0) -> None:
    """Write the generator as a sparse listing: row index, column index, coefficient.

    One line per nonzero entry: ``p q r s  p' q' r' s'  re im``, sorted by
    (row, column) position.
    """
    G = system.generator(t).tocoo()
    order = np.lexsort((G.col, G.row))
    out.write(f"% moment generator order={system.order} frame={system.frame!r} nnz={G.nnz}\n")
    for k in order:
        row = " ".join(map(str, system.indices[G.row[k]]))
        col = " ".join(map(str, system.indices[G.col[k]]))
        v = G.data[k]
        out.write(f"{row}  {col}  {float(v.real)!r} {float(v.imag)!r}\n")
