"""Physical constants, system parameters and polariton-mode algebra.

Everything is stored in angular frequency (rad/s). Conversion to ordinary
frequency happens only through :meth:`SystemParams.from_hz` and
:meth:`SystemParams.to_hz`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K
TWO_PI = 2.0 * math.pi

#: gyromagnetic ratio gamma/2pi in Hz/T (B = 281.25 mT <-> 7.875 GHz)
GAMMA_GYRO_HZ_PER_T = 28.0e9
GAMMA_GYRO = TWO_PI * GAMMA_GYRO_HZ_PER_T


def hz_to_rad(f: float) -> float:
    return float(f) * TWO_PI


def rad_to_hz(w: float) -> float:
    """Inverse of :func:`hz_to_rad`, exact for inputs with at most 15 significant digits.

    Multiplication by 2*pi is not injective on doubles: two neighbouring
    frequencies can round to the same angular frequency. Among the exact
    preimages near ``w / 2pi`` the one with the shortest decimal form wins,
    which recovers any value a user can have typed.
    """
    w = float(w)
    f = w / TWO_PI
    if not math.isfinite(f):
        return f
    cands = [f]
    for direction in (math.inf, -math.inf):
        c = f
        for _ in range(4):
            c = math.nextafter(c, direction)
            cands.append(c)
    exact = [c for c in cands if c * TWO_PI == w]
    if not exact:
        return f
    return min(exact, key=lambda c: (len(repr(c)), abs(c - f)))


def thermal_occupation(omega: float, T: float) -> float:
    """Bose-Einstein occupation ``1/(exp(hbar*omega/(k_B*T)) - 1)``.

    Parameters
    ----------
    omega : float
        Angular frequency in rad/s, must be positive.
    T : float
        Temperature in kelvin.
    """
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega!r}")
    if T < 0:
        raise ValueError(f"temperature must be non-negative, got {T!r}")
    if T == 0:
        return 0.0
    x = HBAR * omega / (K_B * T)
    return float(1.0 / math.expm1(x))


def magnon_frequency(B: float, gamma_gyro: float = GAMMA_GYRO) -> float:
    """Kittel-mode frequency ``gamma * B`` (rad/s) for a bias field ``B`` in tesla."""
    if not B > 0:
        raise ValueError(f"bias field must be positive, got {B!r}")
    if not gamma_gyro > 0:
        raise ValueError(f"gyromagnetic ratio must be positive, got {gamma_gyro!r}")
    return gamma_gyro * B


@dataclass(frozen=True)
class BathOccupations:
    n_c: float
    n_m: float

    def __post_init__(self):
        if self.n_c < 0 or self.n_m < 0:
            raise ValueError("thermal occupations must be non-negative")


@dataclass(frozen=True)
class SystemParams:
    """Rates and frequencies of the driven cavity-magnon system, in rad/s.

    ``n_thermal`` optionally pins the bath occupations ``(n_c, n_m)``
    directly instead of deriving them from ``T``; desk-scale oracle runs in
    scaled units use it.
    """

    omega_c: float
    omega_m: float
    g: float
    kappa_c: float
    kappa_m: float
    Omega: float = 0.0
    omega_0: float | None = None
    T: float = 0.0
    n_thermal: tuple[float, float] | None = None

    def __post_init__(self):
        if self.omega_0 is None:
            object.__setattr__(self, "omega_0", self.omega_c)
        checks = {
            "omega_c": self.omega_c > 0,
            "omega_m": self.omega_m > 0,
            "g": self.g >= 0,
            "kappa_c": self.kappa_c > 0,
            "kappa_m": self.kappa_m > 0,
            "Omega": self.Omega >= 0,
            "T": self.T >= 0,
        }
        for name, ok in checks.items():
            if not ok:
                raise ValueError(f"invalid {name}={getattr(self, name)!r}")
        for name in ("omega_c", "omega_m", "g", "kappa_c", "kappa_m", "Omega", "omega_0", "T"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.n_thermal is not None:
            n_c, n_m = self.n_thermal
            object.__setattr__(self, "n_thermal", (float(n_c), float(n_m)))
            BathOccupations(*self.n_thermal)

    @classmethod
    def from_hz(
        cls,
        omega_c_hz: float,
        g_hz: float,
        kappa_c_hz: float,
        kappa_m_hz: float,
        omega_m_hz: float | None = None,
        B: float | None = None,
        Omega_hz: float = 0.0,
        omega_0_hz: float | None = None,
        T: float = 0.0,
        gamma_gyro_hz_per_T: float = GAMMA_GYRO_HZ_PER_T,
    ) -> "SystemParams":
        """Build from ordinary frequencies (Hz). Give exactly one of ``omega_m_hz`` or ``B`` (tesla)."""
        if (omega_m_hz is None) == (B is None):
            raise ValueError("give exactly one of omega_m_hz or B")
        if B is not None:
            if not B > 0:
                raise ValueError(f"bias field must be positive, got {B!r}")
            omega_m_hz = gamma_gyro_hz_per_T * B
        return cls(
            omega_c=hz_to_rad(omega_c_hz),
            omega_m=hz_to_rad(omega_m_hz),
            g=hz_to_rad(g_hz),
            kappa_c=hz_to_rad(kappa_c_hz),
            kappa_m=hz_to_rad(kappa_m_hz),
            Omega=hz_to_rad(Omega_hz),
            omega_0=None if omega_0_hz is None else hz_to_rad(omega_0_hz),
            T=float(T),
        )

    def to_hz(self) -> dict:
        out = {}
        for name in ("omega_c", "omega_m", "g", "kappa_c", "kappa_m", "Omega", "omega_0"):
            out[name + "_hz"] = rad_to_hz(getattr(self, name))
        out["T"] = self.T
        return out

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def bath(self) -> BathOccupations:
        if self.n_thermal is not None:
            return BathOccupations(*self.n_thermal)
        return BathOccupations(
            thermal_occupation(self.omega_c, self.T),
            thermal_occupation(self.omega_m, self.T),
        )

    def mode_matrix(self) -> np.ndarray:
        """Non-Hermitian 2x2 matrix whose eigenvalues are the polariton frequencies."""
        return np.array(
            [[self.omega_c - 1j * self.kappa_c, self.g], [self.g, self.omega_m - 1j * self.kappa_m]]
        )

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def reference_params(
    B: float = 0.28125,
    Omega_hz: float = 0.0,
    omega_0_hz: float | None = None,
    T: float = 300.0,
) -> SystemParams:
    """The YIG-sphere parameter set: cavity at 7.875 GHz, g/2pi = 10.8 MHz."""
    return SystemParams.from_hz(
        omega_c_hz=7.875e9,
        g_hz=10.8e6,
        kappa_c_hz=1.35e6,
        kappa_m_hz=1.06e6,
        B=B,
        Omega_hz=Omega_hz,
        omega_0_hz=omega_0_hz,
        T=T,
    )


class DegenerateModesError(ValueError):
    """Raised at an exceptional point, where the two polariton modes coalesce."""


@dataclass(frozen=True)
class PolaritonModes:
    omega_plus: complex
    omega_minus: complex
    vec_plus: np.ndarray
    vec_minus: np.ndarray
    gamma_plus: complex
    gamma_minus: complex
    coeff_A: float
    coeff_B: float
    coeff_C: float
    #: same coefficient built from the magnon components, |b+ b-|^2/|det|^2
    coeff_C_beta: float
    delta_omega: float
    kappa_bar: float

    @property
    def participation(self) -> float:
        """Fraction ``2C/(A+B)`` of the photon population taking part in the oscillation."""
        return 2.0 * self.coeff_C / (self.coeff_A + self.coeff_B)

    def amplitudes(self, t, frame: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Exact two-mode superposition ``(<c>(t), <m>(t))``.

        ``frame`` is the angular frequency of the rotating frame the
        amplitudes are expressed in (0 for the laboratory frame). Working in
        the rotating frame avoids losing digits to the ~1e4 rad carrier phase.
        """
        t = np.asarray(t, dtype=float)
        ep = self.gamma_plus * np.exp(-1j * (self.omega_plus - frame) * t)
        em = self.gamma_minus * np.exp(-1j * (self.omega_minus - frame) * t)
        c = ep * self.vec_plus[0] + em * self.vec_minus[0]
        m = ep * self.vec_plus[1] + em * self.vec_minus[1]
        return c, m


def polariton_modes(params: SystemParams, initial_c: complex = 1.0) -> PolaritonModes:
    wc, wm, g = params.omega_c, params.omega_m, params.g
    kc, km = params.kappa_c, params.kappa_m
    mean = 0.5 * (wc + wm) - 0.5j * (kc + km)
    root = np.sqrt(complex((0.5 * (wc - wm) - 0.5j * (kc - km)) ** 2 + g * g))
    if root == 0:
        raise DegenerateModesError("exceptional point: the two eigenfrequencies coincide")
    w1, w2 = mean + root, mean - root
    # label + as the larger real part, ties broken by smaller imaginary part
    if (w2.real, -w2.imag) > (w1.real, -w1.imag):
        w1, w2 = w2, w1

    vecs = []
    for w in (w1, w2):
        if g == 0:
            # decoupled: pick whichever bare mode this eigenvalue belongs to
            v = np.array([1.0, 0.0], dtype=complex)
            if abs(w - (wc - 1j * kc)) > abs(w - (wm - 1j * km)):
                v = np.array([0.0, 1.0], dtype=complex)
        else:
            # two equivalent null vectors; the longer one survives tiny g
            v = np.array([g, w - wc + 1j * kc], dtype=complex)
            alt = np.array([w - wm + 1j * km, g], dtype=complex)
            if np.linalg.norm(alt) > np.linalg.norm(v):
                v = alt
            v /= np.linalg.norm(v)
        vecs.append(v)
    (ap, bp), (am, bm) = vecs
    det = ap * bm - am * bp
    if abs(det) < 1e-12:
        raise DegenerateModesError("mode vectors are parallel (exceptional point)")
    gp = bm * initial_c / det
    gm = -bp * initial_c / det
    d2 = abs(det) ** 2
    return PolaritonModes(
        omega_plus=complex(w1),
        omega_minus=complex(w2),
        vec_plus=vecs[0],
        vec_minus=vecs[1],
        gamma_plus=complex(gp),
        gamma_minus=complex(gm),
        coeff_A=float(abs(ap * bm) ** 2 / d2),
        coeff_B=float(abs(am * bp) ** 2 / d2),
        coeff_C=float(abs(ap * am) ** 2 / d2),
        coeff_C_beta=float(abs(bp * bm) ** 2 / d2),
        delta_omega=math.sqrt((wc - wm) ** 2 + 4.0 * g * g),
        kappa_bar=0.5 * (kc + km),
    )
