"""Reproducible scenario runners: sweeps, pulses, g2 maps and the cross-solver verifier.

A scenario is described by a flat ``key = value`` text file with dotted
keys, for example::

    scenario = continuous_sweep
    params.Omega_hz = 2e12
    sweep.B_mT = 250:320:57
    sweep.omega_0_hz = 7.8e9:7.95e9:76
    solver = moments
    order = 4

External units are Hz for frequencies and rates, mT for the bias field, K
for temperature and seconds for times. A sweep axis is either a comma list
or ``min:max:count`` (append ``:log`` for geometric spacing). Results come
back as a :class:`ResultTable`, written as CSV plus a JSON sidecar.
"""
from __future__ import annotations

import csv
import datetime
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__
from .analytic import g2_steady_zero_detuning, pulse_envelope_arrays, steady_occupations
from .fock import FockLindblad, desk_params
from .moments import (
    C,
    M,
    MAGNON_PAIRS,
    N_MAGNON,
    N_PHOTON,
    PHOTON_PAIRS,
    IntegrationError,
    SingularBlockError,
    build_system,
    initial_coherent_thermal,
    integrate,
    moment_indices,
    steady_state,
)
from .params import HBAR, SystemParams, hz_to_rad, magnon_frequency, polariton_modes
from .trajectories import (
    DEFAULT_MOMENTS,
    EnsembleConfig,
    InitialSpec,
    NonFiniteStateError,
    g2_estimates,
    run_ensemble,
)

SCENARIOS = ("continuous_sweep", "pulse", "g2_vs_drive", "g2_vs_temperature", "verify")
SOLVERS = ("analytic", "moments", "trajectories")
AXES = ("B_mT", "omega_0_hz", "Omega_hz", "T")
PARAM_KEYS = ("omega_c_hz", "g_hz", "kappa_c_hz", "kappa_m_hz", "omega_m_hz", "B_mT", "Omega_hz", "omega_0_hz", "T")

# accepted g2 window; the model only admits classical (P >= 0) Gaussian states
G2_LOWER = 1.0 - 1e-6
G2_UPPER = 2.0 + 1e-2

BASE_PARAMS = {
    "omega_c_hz": 7.875e9,
    "g_hz": 10.8e6,
    "kappa_c_hz": 1.35e6,
    "kappa_m_hz": 1.06e6,
    "B_mT": 281.25,
    "Omega_hz": 0.0,
    "T": 300.0,
}

RESONANCES_HZ = "7.865e9,7.875e9,7.885e9"

SCENARIO_DEFAULTS = {
    "continuous_sweep": {
        "params.Omega_hz": "2e12",
        "sweep.B_mT": "250:320:57",
        "sweep.omega_0_hz": "7.8e9:7.95e9:76",
        "order": "4",
    },
    "pulse": {
        "pulse.n_inject": "1e8",
        "pulse.t_max": "500e-9",
        "pulse.n_times": "501",
        "pulse.envelopes": "true",
        "pulse.cavity_thermal": "false",
        "order": "4",
    },
    "g2_vs_drive": {
        "sweep.omega_0_hz": RESONANCES_HZ,
        "sweep.Omega_hz": "1e6:1e12:61:log",
        "order": "4",
    },
    "g2_vs_temperature": {
        "params.Omega_hz": "1e8",
        "sweep.omega_0_hz": RESONANCES_HZ,
        "sweep.T": "1:300:60",
        "order": "4",
    },
    "verify": {},
}

GENERIC_DEFAULTS = {
    "solver": "moments",
    "order": "2",
    "n_traj": "10000",
    "dt": "1e-11",
    "seed": "271828",
    "threads": "1",
    "traj.scheme": "euler_maruyama",
    "traj.t_settle": "2e-6",
    "verify.corrupt_generator": "false",
    "verify.fock_cutoff": "40",
    "verify.fock_t_max": "1.0",
}


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration (a usage error)."""


def parse_axis(text: str) -> tuple[float, ...]:
    """``"a,b,c"`` or ``"min:max:count"`` (optionally ``":log"``) to a tuple of floats."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        log = parts[-1].strip().lower() == "log"
        if log:
            parts = parts[:-1]
        if len(parts) != 3:
            raise ConfigError(f"range must be min:max:count, got {text!r}")
        lo, hi = float(parts[0]), float(parts[1])
        try:
            count = int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"range count must be an integer, got {parts[2]!r}") from exc
        if count < 1:
            raise ConfigError(f"range count must be >= 1, got {count}")
        if count == 1:
            return (lo,)
        if log:
            if lo <= 0 or hi <= 0:
                raise ConfigError("log range needs positive endpoints")
            return tuple(float(x) for x in np.geomspace(lo, hi, count))
        return tuple(float(x) for x in np.linspace(lo, hi, count))
    values = tuple(float(v) for v in text.split(",") if v.strip())
    if not values:
        raise ConfigError("sweep axis is empty")
    return values


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def read_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario description.

    ``params`` holds the fixed parameters in external units, ``axes`` the
    swept ones in the fixed order ``B_mT, omega_0_hz, Omega_hz, T``.
    ``explicit`` records which keys the user set, used only for
    consistency checks.
    """

    scenario: str
    params: dict
    axes: dict
    solver: str = "moments"
    order: int = 2
    n_traj: int = 10000
    dt: float = 1e-11
    seed: int = 271828
    threads: int = 1
    scheme: str = "euler_maruyama"
    t_settle: float = 2e-6
    n_inject: float = 0.0
    t_max: float = 500e-9
    n_times: int = 501
    envelopes: bool = False
    cavity_thermal: bool = False
    corrupt_generator: bool = False
    fock_cutoff: int = 40
    fock_t_max: float = 1.0
    out: str | None = None
    explicit: frozenset = field(default=frozenset(), compare=False)

    @classmethod
    def from_mapping(cls, scenario: str, entries: dict[str, str]) -> "ScenarioConfig":
        """Resolve ``entries`` (config file merged with overrides) on top of the defaults."""
        scenario = scenario.replace("-", "_")
        if scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
        entries = {k.strip(): str(v) for k, v in entries.items()}
        if "scenario" in entries and entries.pop("scenario").replace("-", "_") != scenario:
            raise ConfigError("config file scenario does not match the requested subcommand")
        explicit = frozenset(entries)
        merged = {**GENERIC_DEFAULTS, **SCENARIO_DEFAULTS[scenario], **entries}

        params = dict(BASE_PARAMS)
        axes: dict[str, tuple[float, ...]] = {}
        kw: dict = {}
        for key, value in merged.items():
            if key.startswith("params."):
                name = key[len("params."):]
                if name not in PARAM_KEYS:
                    raise ConfigError(f"unknown parameter {name!r}")
                try:
                    params[name] = float(value)
                except ValueError as exc:
                    raise ConfigError(f"{key}: not a number: {value!r}") from exc
            elif key.startswith("sweep."):
                name = key[len("sweep."):]
                if name not in AXES:
                    raise ConfigError(f"cannot sweep {name!r}; axes are {AXES}")
                try:
                    axes[name] = parse_axis(value)
                except ValueError as exc:
                    raise ConfigError(f"{key}: {exc}") from exc
            else:
                kw[key] = value

        m_given = "params.omega_m_hz" in explicit
        b_given = "params.B_mT" in explicit or "sweep.B_mT" in explicit
        if m_given and b_given:
            raise ConfigError("give either the bias field B_mT or omega_m_hz, not both")
        if m_given:
            params.pop("B_mT", None)
            axes.pop("B_mT", None)
        if scenario == "pulse":
            # pulse excitation: no continuous drive
            params["Omega_hz"] = 0.0
            if "Omega_hz" in axes:
                raise ConfigError("the pulse scenario has no continuous drive to sweep")

        known = {
            "solver", "order", "n_traj", "dt", "seed", "threads", "out",
            "traj.scheme", "traj.t_settle", "pulse.n_inject", "pulse.t_max",
            "pulse.n_times", "pulse.envelopes", "pulse.cavity_thermal", "verify.corrupt_generator",
            "verify.fock_cutoff", "verify.fock_t_max",
        }
        unknown = set(kw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(
                scenario=scenario,
                params=params,
                axes={k: axes[k] for k in AXES if k in axes},
                solver=kw["solver"],
                order=int(kw["order"]),
                n_traj=int(float(kw["n_traj"])),
                dt=float(kw["dt"]),
                seed=int(float(kw["seed"])),
                threads=int(kw["threads"]),
                scheme=kw["traj.scheme"],
                t_settle=float(kw["traj.t_settle"]),
                n_inject=float(kw.get("pulse.n_inject", 0.0)),
                t_max=float(kw.get("pulse.t_max", 500e-9)),
                n_times=int(kw.get("pulse.n_times", 501)),
                envelopes=_parse_bool(kw.get("pulse.envelopes", "false")),
                cavity_thermal=_parse_bool(kw.get("pulse.cavity_thermal", "false")),
                corrupt_generator=_parse_bool(kw["verify.corrupt_generator"]),
                fock_cutoff=int(kw["verify.fock_cutoff"]),
                fock_t_max=float(kw["verify.fock_t_max"]),
                out=kw.get("out"),
                explicit=explicit,
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    @classmethod
    def from_text(cls, scenario: str | None, text: str, overrides: dict[str, str] | None = None) -> "ScenarioConfig":
        entries = read_config_text(text)
        entries.update(overrides or {})
        if scenario is None:
            if "scenario" not in entries:
                raise ConfigError("no scenario given")
            scenario = entries["scenario"]
        return cls.from_mapping(scenario, entries)

    def validate(self):
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if self.solver == "analytic" and self.scenario == "pulse":
            raise ConfigError("the pulse scenario needs the moments or trajectories solver")
        if self.order < 1:
            raise ConfigError("order must be >= 1")
        if self.solver != "moments" and "order" in self.explicit:
            raise ConfigError("order only applies to the moments solver")
        traj_keys = {"n_traj", "dt", "seed", "traj.scheme", "traj.t_settle"}
        if self.solver != "trajectories" and self.scenario != "verify" and traj_keys & self.explicit:
            raise ConfigError("n_traj/dt/seed only apply to the trajectories solver")
        if self.n_traj < 1 or not self.dt > 0 or self.threads < 1:
            raise ConfigError("n_traj, dt and threads must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.scenario == "pulse":
            if self.n_inject < 0 or not self.t_max > 0 or self.n_times < 2:
                raise ConfigError("pulse needs n_inject >= 0, t_max > 0 and n_times >= 2")
        if self.fock_cutoff < 2 or not self.fock_t_max > 0:
            raise ConfigError("invalid Fock-oracle settings")
        for name, values in self.axes.items():
            if not values:
                raise ConfigError(f"sweep axis {name} is empty")
        for pt in self.points():
            try:
                self.point_params(pt)
            except ValueError as exc:
                raise ConfigError(f"invalid parameters at {pt}: {exc}") from exc

    def point_params(self, point: dict) -> SystemParams:
        """SystemParams for one sweep point (axis values override the fixed parameters)."""
        p = {**self.params, **point}
        omega_0 = p.get("omega_0_hz")
        if self.scenario == "pulse" and omega_0 is None:
            omega_0 = p["omega_c_hz"]
        kw = {}
        if "B_mT" in p:
            kw["B"] = p["B_mT"] * 1e-3
        else:
            kw["omega_m_hz"] = p["omega_m_hz"]
        return SystemParams.from_hz(
            omega_c_hz=p["omega_c_hz"],
            g_hz=p["g_hz"],
            kappa_c_hz=p["kappa_c_hz"],
            kappa_m_hz=p["kappa_m_hz"],
            Omega_hz=p["Omega_hz"],
            omega_0_hz=omega_0,
            T=p["T"],
            **kw,
        )

    def points(self) -> list[dict]:
        names = list(self.axes)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.axes[n] for n in names))]

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "explicit"}
        d["axes"] = {k: list(v) for k, v in self.axes.items()}
        return d


@dataclass
class ResultTable:
    """Rows of results plus the metadata needed to reproduce them."""

    columns: list[str]
    rows: list[list]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def write(self, path: str | Path) -> tuple[Path, Path]:
        """Write ``path`` (CSV) and ``path`` with suffix ``.json`` (metadata)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        meta = path.with_suffix(".json")
        meta.write_text(json.dumps(self.metadata, indent=2, sort_keys=True, default=_json_default) + "\n")
        return path, meta


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (frozenset, set, tuple)):
        return list(o)
    return str(o)


def _metadata(config: ScenarioConfig, **extra) -> dict:
    return {
        "config": config.as_dict(),
        "seed": config.seed,
        "code_version": __version__,
        "numpy_version": np.__version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        **extra,
    }


def pulse_power_dbm(n_photons: float, omega_0_hz: float = 7.875e9, tau: float = 1e-9) -> float:
    """Mean power of ``n_photons`` quanta at ``omega_0_hz`` delivered over ``tau`` seconds, in dBm."""
    if not n_photons > 0 or not tau > 0 or not omega_0_hz > 0:
        raise ValueError("photon number, duration and frequency must be positive")
    power_w = n_photons * HBAR * hz_to_rad(omega_0_hz) / tau
    return 10.0 * math.log10(power_w / 1e-3)


# -- steady-state sweeps ---------------------------------------------------

STEADY_COLUMNS = ["n_photon", "n_magnon", "g2_photon", "g2_magnon"]


def _g2_in_bounds(*values) -> bool:
    return all(not math.isfinite(v) or G2_LOWER <= v <= G2_UPPER for v in values)


def _steady_point(args) -> tuple[list, str]:
    """Steady observables at one parameter point; failures are reported, not raised."""
    params, solver, order, traj = args
    nan = float("nan")
    try:
        if solver == "analytic":
            st = steady_occupations(params)
            try:
                g2p, g2m = g2_steady_zero_detuning(params)
            except ValueError:
                # closed form exists only at zero detuning
                g2p = g2m = nan
            vals = [st.n_photon, st.n_magnon, g2p, g2m]
        elif solver == "moments":
            v = steady_state(build_system(params, order))
            g2p, g2m = (v.g2_photon, v.g2_magnon) if order >= 4 else (nan, nan)
            vals = [v.n_photon, v.n_magnon, g2p, g2m]
        else:
            n_traj, dt, seed, scheme, t_settle, workers = traj
            n_steps = max(1, int(round(t_settle / dt)))
            cfg = EnsembleConfig(n_traj, dt, seed, (n_steps * dt,), scheme, workers)
            est = run_ensemble(cfg, params, InitialSpec(0.0), DEFAULT_MOMENTS)
            g2 = g2_estimates(est)
            vals = [
                float(est[N_PHOTON][0][0].real),
                float(est[N_MAGNON][0][0].real),
                float(g2.g2_photon[0]),
                float(g2.g2_magnon[0]),
            ]
    except (SingularBlockError, IntegrationError, NonFiniteStateError, np.linalg.LinAlgError) as exc:
        return [nan] * 4, f"failed: {type(exc).__name__}"
    if not _g2_in_bounds(vals[2], vals[3]):
        return vals, "g2_out_of_bounds"
    return vals, "ok"


def _map(fn: Callable, jobs: list, threads: int) -> list:
    """Order-preserving map, optionally over a process pool."""
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    return [fn(j) for j in jobs]


def _steady_sweep(config: ScenarioConfig) -> ResultTable:
    points = config.points()
    traj_workers = config.threads if config.solver == "trajectories" else 1
    traj = (config.n_traj, config.dt, config.seed, config.scheme, config.t_settle, traj_workers)
    jobs = [(config.point_params(pt), config.solver, config.order, traj) for pt in points]
    # trajectories parallelise inside the ensemble, the others across points
    results = _map(_steady_point, jobs, 1 if config.solver == "trajectories" else config.threads)
    axis_names = list(config.axes)
    rows = [[pt[a] for a in axis_names] + vals + [status] for pt, (vals, status) in zip(points, results)]
    meta = _metadata(config)
    if config.solver == "trajectories":
        meta["scheme"] = config.scheme
    return ResultTable(axis_names + STEADY_COLUMNS + ["status"], rows, meta)


def run_continuous_sweep(config: ScenarioConfig) -> ResultTable:
    """Steady photon and magnon numbers and g2 on the (B, omega_0) grid under continuous drive."""
    if config.scenario != "continuous_sweep":
        raise ConfigError("run_continuous_sweep needs scenario = continuous_sweep")
    return _steady_sweep(config)


def run_g2_sweeps(config: ScenarioConfig) -> ResultTable:
    """One-dimensional steady g2 sweeps against drive strength or temperature."""
    if config.scenario not in ("g2_vs_drive", "g2_vs_temperature"):
        raise ConfigError("run_g2_sweeps needs scenario g2_vs_drive or g2_vs_temperature")
    return _steady_sweep(config)


# -- pulse -----------------------------------------------------------------


def _pulse_times(config: ScenarioConfig) -> np.ndarray:
    """Output grid; for trajectories it is snapped to a whole number of steps."""
    spacing = config.t_max / (config.n_times - 1)
    if config.solver == "trajectories":
        stride = max(1, int(round(spacing / config.dt)))
        return np.arange(config.n_times) * (stride * config.dt)
    return np.linspace(0.0, config.t_max, config.n_times)


def run_pulse(config: ScenarioConfig) -> ResultTable:
    """Free evolution after injecting a coherent photon pulse into a thermal system."""
    if config.scenario != "pulse":
        raise ConfigError("run_pulse needs scenario = pulse")
    times = _pulse_times(config)
    axis_names = list(config.axes)
    traj = config.solver == "trajectories"
    cols = axis_names + ["t_s", "n_photon", "n_magnon", "g2_photon", "g2_magnon", "c_re", "c_im", "m_re", "m_im"]
    if traj:
        cols += ["n_photon_se", "n_magnon_se", "g2_photon_se", "g2_magnon_se", "g2_photon_reliable", "g2_magnon_reliable"]
    if config.envelopes:
        cols += ["envelope_c_sq", "envelope_m_sq"]
    rows: list[list] = []
    statuses = []
    for pt in config.points():
        params = config.point_params(pt)
        lead = [pt[a] for a in axis_names]
        try:
            if traj:
                cfg = EnsembleConfig(config.n_traj, config.dt, config.seed, tuple(times), config.scheme, config.threads)
                spec = InitialSpec(config.n_inject, cavity_thermal=config.cavity_thermal)
                est = run_ensemble(cfg, params, spec, DEFAULT_MOMENTS + (C, M))
                g2 = g2_estimates(est)
                n_ph, se_ph = est[N_PHOTON]
                n_mg, se_mg = est[N_MAGNON]
                c, m = est[C][0], est[M][0]
                body = [n_ph.real, n_mg.real, g2.g2_photon, g2.g2_magnon, c.real, c.imag, m.real, m.imag,
                        se_ph, se_mg, g2.err_photon, g2.err_magnon, g2.reliable_photon, g2.reliable_magnon]
            else:
                system = build_system(params, config.order)
                init = initial_coherent_thermal(
                    config.n_inject, params.bath(), config.order, cavity_thermal=config.cavity_thermal
                )
                series = integrate(system, init, (0.0, float(times[-1])), times=times)
                if config.order >= 4:
                    g2p, g2m = series.g2_photon, series.g2_magnon
                else:
                    g2p = g2m = np.full(len(times), np.nan)
                c, m = series[C], series[M]
                body = [series.n_photon, series.n_magnon, g2p, g2m, c.real, c.imag, m.real, m.imag]
            status = "ok"
        except (SingularBlockError, IntegrationError, NonFiniteStateError) as exc:
            n_body = len(cols) - len(axis_names) - 1 - (2 if config.envelopes else 0)
            body = [np.full(len(times), np.nan)] * n_body
            status = f"failed: {type(exc).__name__}"
        if config.envelopes:
            env_c, env_m = pulse_envelope_arrays(polariton_modes(params), config.n_inject, times)
            body = body + [env_c, env_m]
        statuses.append(status)
        for k, t in enumerate(times):
            rows.append(lead + [float(t)] + [_cell(b[k]) for b in body])
    meta = _metadata(config, status=statuses)
    if traj:
        meta["scheme"] = config.scheme
    return ResultTable(cols, rows, meta)


def _cell(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    return float(v)


# -- level repulsion -------------------------------------------------------


@dataclass
class Anticrossing:
    """Drive frequencies of the two photon-number maxima at each bias field (all in Hz / mT)."""

    B_mT: np.ndarray
    upper_hz: np.ndarray
    lower_hz: np.ndarray

    @property
    def splitting_hz(self) -> np.ndarray:
        return self.upper_hz - self.lower_hz

    @property
    def min_splitting_hz(self) -> float:
        return float(np.nanmin(self.splitting_hz))

    @property
    def B_at_min_mT(self) -> float:
        return float(self.B_mT[np.nanargmin(self.splitting_hz)])


def photon_number_vs_drive(params: SystemParams, omega_0_hz: float, order: int = 2) -> float:
    return steady_state(build_system(params.with_(omega_0=hz_to_rad(omega_0_hz)), order)).n_photon


def anticrossing(
    params: SystemParams,
    B_mT: Sequence[float],
    omega_0_hz: Sequence[float],
    refine: bool = True,
) -> Anticrossing:
    """Locate the two maxima of the steady photon number along the drive-frequency axis.

    The coarse grid brackets each local maximum; ``refine`` polishes it with
    a bounded scalar search on the moment-hierarchy steady state.
    """
    grid = np.asarray(omega_0_hz, dtype=float)
    upper, lower = [], []
    for b in B_mT:
        p = params.with_(omega_m=magnon_frequency(b * 1e-3))
        vals = np.array([photon_number_vs_drive(p, f) for f in grid])
        inner = np.flatnonzero((vals[1:-1] > vals[:-2]) & (vals[1:-1] >= vals[2:])) + 1
        peaks = sorted(inner, key=lambda i: -vals[i])[:2]
        if len(peaks) < 2:
            upper.append(np.nan)
            lower.append(np.nan)
            continue
        located = []
        for i in sorted(peaks):
            if refine:
                res = minimize_scalar(
                    lambda f: -photon_number_vs_drive(p, f),
                    bounds=(grid[i - 1], grid[i + 1]),
                    method="bounded",
                    options={"xatol": 1.0},
                )
                located.append(float(res.x))
            else:
                located.append(float(grid[i]))
        lower.append(located[0])
        upper.append(located[1])
    return Anticrossing(np.asarray(B_mT, dtype=float), np.array(upper), np.array(lower))


# -- verification ----------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""


def _rel_err(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def check_steady_analytic() -> CheckResult:
    worst = 0.0
    for b in (0.250, 0.28125, 0.320):
        for f0 in (7.8e9, 7.875e9, 7.95e9):
            p = SystemParams.from_hz(7.875e9, 10.8e6, 1.35e6, 1.06e6, B=b, Omega_hz=2e12, omega_0_hz=f0, T=300.0)
            v = steady_state(build_system(p, 2))
            st = steady_occupations(p)
            worst = max(worst, _rel_err([v.n_photon, v.n_magnon], [st.n_photon, st.n_magnon]))
    return CheckResult("steady_state_analytic_vs_moments", worst <= 1e-8, worst, 1e-8)


def check_g2_closed_form() -> CheckResult:
    worst = 0.0
    for om in (1e8, 1e10):
        p = SystemParams.from_hz(7.875e9, 10.8e6, 1.35e6, 1.06e6, B=0.28125, Omega_hz=om, omega_0_hz=7.87e9, T=300.0)
        v = steady_state(build_system(p, 4))
        worst = max(worst, _rel_err([v.g2_photon, v.g2_magnon], list(g2_steady_zero_detuning(p))))
    return CheckResult("g2_closed_form_vs_moments", worst <= 1e-6, worst, 1e-6)


def fock_comparison(
    params: SystemParams,
    n_inject: float,
    times: np.ndarray,
    cutoff: int = 40,
    system=None,
):
    """Moments up to order 2 from the number-basis integrator and the hierarchy on the same grid."""
    if system is None:
        system = build_system(params, 2)
    init = initial_coherent_thermal(n_inject, params.bath(), system.order)
    ms = integrate(system, init, (0.0, float(times[-1])), times=times, rtol=1e-11)
    fl = FockLindblad(params, cutoff)
    fs = fl.evolve(fl.initial_state(n_inject), times, system.indices)
    return fs, ms


def check_fock(corrupt: bool = False, cutoff: int = 40, t_max: float = 1.0) -> CheckResult:
    p = desk_params()
    system = build_system(p, 2)
    if corrupt:
        system = system.with_flipped_coefficient(N_PHOTON, (1, 0, 0, 1))
    times = np.linspace(0.0, t_max, 3)
    fs, ms = fock_comparison(p, 4.0, times, cutoff, system)
    scale = np.abs(fs.values).max(axis=0)
    err = float((np.abs(fs.values - ms.values).max(axis=0) / np.maximum(scale, 1e-300)).max())
    return CheckResult("fock_oracle_vs_moments", err <= 1e-4, err, 1e-4, f"cutoff={cutoff} t_max={t_max}")


def within_se(est_mean, est_se, reference, k: float = 5.0, floor: float = 1e-9) -> np.ndarray:
    """Elementwise ``|mean - ref| <= k * se`` with a tiny absolute floor for noiseless entries."""
    diff = np.abs(np.asarray(est_mean) - np.asarray(reference))
    tol = k * np.asarray(est_se) + floor * np.maximum(np.abs(reference), 1.0)
    return diff <= tol


def check_trajectories_vs_moments(n_traj: int = 4096, seed: int = 1) -> CheckResult:
    p = desk_params()
    dt = 2e-3
    times = np.arange(11) * (50 * dt)
    idx = moment_indices(2)[1:]
    cfg = EnsembleConfig(n_traj, dt, seed, tuple(times))
    est = run_ensemble(cfg, p, InitialSpec(4.0), idx)
    ms = integrate(build_system(p, 2), initial_coherent_thermal(4.0, p.bath(), 2), (0.0, times[-1]), times=times)
    ok = within_se(est.mean, est.standard_error, ms.values[:, 1:])
    frac = float(ok.mean())
    return CheckResult("trajectories_vs_moments", frac >= 0.99, frac, 0.99, "fraction within 5 SE")


def check_ou_stationary(n_traj: int = 4096, seed: int = 2) -> CheckResult:
    n_bar = 2.0
    p = SystemParams(omega_c=1.0, omega_m=1.0, g=0.0, kappa_c=1.0, kappa_m=1.0, omega_0=1.0, n_thermal=(n_bar, 0.0))
    cfg = EnsembleConfig(n_traj, 1e-2, seed, (8.0,))
    est = run_ensemble(cfg, p, InitialSpec(0.0), (N_PHOTON,))
    mean, se = est[N_PHOTON]
    z = float(abs(mean[0].real - n_bar) / se[0])
    return CheckResult("ou_stationary_occupation", z <= 5.0, z, 5.0, "deviation in standard errors")


def check_determinism(seed: int = 3) -> CheckResult:
    p = desk_params()
    runs = []
    for workers in (1, 2):
        cfg = EnsembleConfig(300, 1e-2, seed, (0.5, 1.0), workers=workers, chunk_size=64)
        est = run_ensemble(cfg, p, InitialSpec(4.0))
        runs.append(est.mean.tobytes() + est.standard_error.tobytes())
    same = runs[0] == runs[1]
    return CheckResult("determinism_across_workers", same, float(same), 1.0)


def run_verify(config: ScenarioConfig) -> ResultTable:
    """Cross-solver consistency suite; one row per check."""
    if config.scenario != "verify":
        raise ConfigError("run_verify needs scenario = verify")
    checks = [
        check_steady_analytic(),
        check_g2_closed_form(),
        check_fock(config.corrupt_generator, config.fock_cutoff, config.fock_t_max),
        check_trajectories_vs_moments(seed=config.seed),
        check_ou_stationary(seed=config.seed + 1),
        check_determinism(seed=config.seed + 2),
    ]
    rows = [[c.name, c.passed, c.measured, c.tolerance, c.detail] for c in checks]
    return ResultTable(
        ["check", "passed", "measured", "tolerance", "detail"],
        rows,
        _metadata(config, all_passed=all(c.passed for c in checks)),
    )


RUNNERS = {
    "continuous_sweep": run_continuous_sweep,
    "pulse": run_pulse,
    "g2_vs_drive": run_g2_sweeps,
    "g2_vs_temperature": run_g2_sweeps,
    "verify": run_verify,
}


def run(config: ScenarioConfig) -> ResultTable:
    return RUNNERS[config.scenario](config)
