"""
Cylindrical cavity mode frequencies and doublet transmission spectra.

Mode frequencies of a closed cylinder of radius ``a`` and length ``L``:

    TE_lmn:  f = c / (2 pi) * sqrt((x'_lm / a)^2 + (n pi / L)^2),   n >= 1
    TM_lmn:  f = c / (2 pi) * sqrt((x_lm  / a)^2 + (n pi / L)^2),   n >= 0

with ``x'_lm`` (``x_lm``) the m-th positive zero of ``J_l'`` (``J_l``).

A wire across the cavity splits one resonance into a doublet. This is
modelled as two identical modes coupled with strength ``g``, giving lines at
``f0 -/+ g/2``. The lower line is the Stokes (signal) mode and the upper line
is the pump. Transmission is the sum of two Lorentzian power profiles.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks

from gempl.constants import CODATA, PhysicalConstants
from gempl.errors import DomainError

__all__ = [
    "INCH",
    "CavityGeometry",
    "ModeIndex",
    "DoubletSpec",
    "SpectrumTrace",
    "bessel_j",
    "bessel_j_prime",
    "bessel_root",
    "bessel_prime_root",
    "te_mode_frequency",
    "tm_mode_frequency",
    "mode_frequency",
    "doublet_from_coupling",
    "fit_coupling",
    "synth_s21",
    "spectral_maxima",
    "stokes_pump_assignment",
    "StokesPumpAssignment",
]

INCH = 0.0254
MAX_ORDER = 20


@dataclass(frozen=True)
class CavityGeometry:
    """Cylinder length ``L`` and diameter ``D`` (m)."""

    length: float
    diameter: float

    def __post_init__(self):
        if not (self.length > 0 and self.diameter > 0):
            raise DomainError(f"cavity dimensions must be positive, got L={self.length!r}, D={self.diameter!r}")

    @property
    def radius(self) -> float:
        return 0.5 * self.diameter

    @classmethod
    def from_inches(cls, length_in: float, diameter_in: float) -> "CavityGeometry":
        return cls(length_in * INCH, diameter_in * INCH)

    def scaled(self, factor: float) -> "CavityGeometry":
        return CavityGeometry(self.length * factor, self.diameter * factor)


@dataclass(frozen=True)
class ModeIndex:
    """Mode label ``kind`` in {"TE", "TM"} with azimuthal ``l``, radial ``m``, axial ``n``."""

    kind: str
    l: int
    m: int
    n: int

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind not in ("TE", "TM"):
            raise DomainError(f"mode kind must be TE or TM, got {self.kind!r}")
        if self.l < 0 or self.m < 1 or self.n < 0:
            raise DomainError(f"invalid mode indices l={self.l}, m={self.m}, n={self.n}")
        if kind == "TE" and self.n < 1:
            raise DomainError("TE modes need n >= 1")

    @classmethod
    def parse(cls, label: str) -> "ModeIndex":
        """Parse compact labels such as ``"TE112"`` (single-digit indices)."""
        s = label.strip().upper()
        if len(s) != 5 or s[:2] not in ("TE", "TM") or not s[2:].isdigit():
            raise DomainError(f"cannot parse mode label {label!r}; expected e.g. 'TE112'")
        return cls(s[:2], int(s[2]), int(s[3]), int(s[4]))

    def __str__(self):
        return f"{self.kind}{self.l}{self.m}{self.n}"


# Bessel functions ---------------------------------------------------------


def _series(n: int, x: float) -> float:
    term = (0.5 * x) ** n / math.factorial(n)
    total = term
    q = -0.25 * x * x
    k = 0
    while abs(term) > 1e-17 * abs(total) or k < 2:
        k += 1
        term *= q / (k * (n + k))
        total += term
        if k > 200:
            break
    return total


def _miller(nmax: int, x: float) -> np.ndarray:
    """J_0..J_nmax at ``x > 0`` by normalised backward recurrence."""
    start = int(max(nmax, x) + 30 + 10 * math.sqrt(max(nmax, x)))
    start += start % 2
    out = np.zeros(nmax + 1)
    jp1, j = 0.0, 1e-30
    norm = 0.0
    for k in range(start, 0, -1):
        jm1 = 2.0 * k / x * j - jp1
        jp1, j = j, jm1
        if abs(j) > 1e250:
            j *= 1e-250
            jp1 *= 1e-250
            out *= 1e-250
            norm *= 1e-250
        if k - 1 <= nmax:
            out[k - 1] = j
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
    norm += j  # J_0 term of 1 = J_0 + 2 sum J_2k
    return out / norm


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind ``J_n(x)`` for integer ``n >= 0``, ``x >= 0``."""
    if n < 0 or x < 0:
        raise DomainError("bessel_j needs n >= 0 and x >= 0")
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x < 4.0:
        return _series(n, x)
    return float(_miller(n, x)[n])


def bessel_j_prime(n: int, x: float) -> float:
    """``J_n'(x)`` via ``(J_{n-1} - J_{n+1}) / 2``."""
    if n == 0:
        return -bessel_j(1, x)
    if x < 4.0:
        return 0.5 * (_series(n - 1, x) - _series(n + 1, x))
    J = _miller(n + 1, x)
    return 0.5 * (J[n - 1] - J[n + 1])


def _check_order(l: int, m: int):
    if l < 0 or m < 1:
        raise DomainError(f"need l >= 0 and m >= 1, got l={l}, m={m}")
    if l > MAX_ORDER or m > MAX_ORDER:
        raise DomainError(f"orders above {MAX_ORDER} are not supported (l={l}, m={m})")


def _nth_root(f, l: int, m: int) -> float:
    # consecutive zeros of J_l and J_l' are more than 2 apart and the first
    # exceeds l, so a 0.5 scan from max(l, 0.05) never skips one
    step = 0.5
    x0 = max(float(l), 0.05)
    f0 = f(x0)
    count = 0
    while True:
        x1 = x0 + step
        f1 = f(x1)
        if f0 == 0.0:
            count += 1
            if count == m:
                return x0
        elif f0 * f1 < 0:
            count += 1
            if count == m:
                return brentq(f, x0, x1, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
        x0, f0 = x1, f1


@lru_cache(maxsize=None)
def bessel_prime_root(l: int, m: int) -> float:
    """m-th positive zero ``x'_lm`` of ``J_l'`` (the zero at the origin is not counted)."""
    _check_order(l, m)
    return _nth_root(lambda x: bessel_j_prime(l, x), l, m)


@lru_cache(maxsize=None)
def bessel_root(l: int, m: int) -> float:
    """m-th positive zero ``x_lm`` of ``J_l``."""
    _check_order(l, m)
    return _nth_root(lambda x: bessel_j(l, x), l, m)


def _cylinder_frequency(root: float, geometry: CavityGeometry, n: int, c: float) -> float:
    kr = root / geometry.radius
    kz = n * math.pi / geometry.length
    return c / (2.0 * math.pi) * math.hypot(kr, kz)


def te_mode_frequency(geometry: CavityGeometry, index: ModeIndex, constants: PhysicalConstants = CODATA) -> float:
    """Resonant frequency (Hz) of a TE_lmn mode."""
    if index.kind != "TE":
        raise DomainError(f"{index} is not a TE mode; use tm_mode_frequency")
    return _cylinder_frequency(bessel_prime_root(index.l, index.m), geometry, index.n, constants.c)


def tm_mode_frequency(geometry: CavityGeometry, index: ModeIndex, constants: PhysicalConstants = CODATA) -> float:
    """Resonant frequency (Hz) of a TM_lmn mode."""
    if index.kind != "TM":
        raise DomainError(f"{index} is not a TM mode; use te_mode_frequency")
    return _cylinder_frequency(bessel_root(index.l, index.m), geometry, index.n, constants.c)


def mode_frequency(geometry: CavityGeometry, index: ModeIndex, constants: PhysicalConstants = CODATA) -> float:
    if index.kind == "TE":
        return te_mode_frequency(geometry, index, constants)
    return tm_mode_frequency(geometry, index, constants)


# doublets and spectra -----------------------------------------------------


@dataclass(frozen=True)
class DoubletSpec:
    """Split resonance: lower (Stokes) line ``f_S`` and upper (pump) line ``f_p``."""

    f_S: float
    f_p: float
    Q_S: float = 500.0
    Q_p: float = 500.0

    def __post_init__(self):
        if not (self.f_S > 0 and self.f_p >= self.f_S):
            raise DomainError(f"need f_p >= f_S > 0, got f_S={self.f_S!r}, f_p={self.f_p!r}")
        if not (self.Q_S > 0 and self.Q_p > 0):
            raise DomainError("quality factors must be positive")

    @property
    def splitting(self) -> float:
        return self.f_p - self.f_S

    @property
    def Omega(self) -> float:
        """Beat angular frequency ``2 pi (f_p - f_S)`` (rad/s)."""
        return 2.0 * math.pi * self.splitting


def doublet_from_coupling(f0: float, g: float, Q_S: float = 500.0, Q_p: float = 500.0) -> DoubletSpec:
    """Two identical modes at ``f0`` coupled with strength ``g`` (Hz) split to ``f0 -/+ g/2``."""
    if g < 0:
        raise DomainError(f"coupling must be non-negative, got {g!r}")
    return DoubletSpec(f0 - 0.5 * g, f0 + 0.5 * g, Q_S, Q_p)


def fit_coupling(f_lower: float, f_upper: float) -> tuple[float, float]:
    """Invert the two-mode model: measured line pair to ``(f0, g)``."""
    lo, hi = sorted((f_lower, f_upper))
    return 0.5 * (lo + hi), hi - lo


@dataclass
class SpectrumTrace:
    """Transmitted power ``|S21|^2`` (linear, arbitrary reference) on a frequency grid."""

    freq_hz: np.ndarray
    s21_power: np.ndarray
    metadata: dict = field(default_factory=dict)

    CSV_HEADER = ("freq_hz", "s21_power")

    def __post_init__(self):
        self.freq_hz = np.asarray(self.freq_hz, dtype=float)
        self.s21_power = np.asarray(self.s21_power, dtype=float)
        if self.freq_hz.ndim != 1 or np.any(np.diff(self.freq_hz) <= 0):
            raise DomainError("frequency grid must be one-dimensional and strictly increasing")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.CSV_HEADER)
            for f, p in zip(self.freq_hz, self.s21_power):
                w.writerow([f"{f:.9g}", f"{p:.9g}"])


def synth_s21(doublet: DoubletSpec, amplitudes=(1.0, 1.0), grid=None) -> SpectrumTrace:
    """Sum of two Lorentzian power lines ``A_k / (1 + 4 Q_k^2 (f/f_k - 1)^2)``.

    ``amplitudes`` is ``(A_S, A_p)``. The default grid spans ten pump
    linewidths either side of the doublet with 4001 points.
    """
    A_S, A_p = (float(a) for a in amplitudes)
    if A_S < 0 or A_p < 0:
        raise DomainError("line amplitudes must be non-negative")
    if grid is None:
        pad = 10.0 * max(doublet.f_S / doublet.Q_S, doublet.f_p / doublet.Q_p)
        grid = np.linspace(doublet.f_S - pad, doublet.f_p + pad, 4001)
    f = np.asarray(grid, dtype=float)
    power = A_S / (1.0 + 4.0 * doublet.Q_S**2 * (f / doublet.f_S - 1.0) ** 2) + A_p / (
        1.0 + 4.0 * doublet.Q_p**2 * (f / doublet.f_p - 1.0) ** 2
    )
    meta = {"f_S": doublet.f_S, "f_p": doublet.f_p, "Q_S": doublet.Q_S, "Q_p": doublet.Q_p, "amplitudes": [A_S, A_p]}
    return SpectrumTrace(f, power, meta)


def spectral_maxima(trace: SpectrumTrace) -> np.ndarray:
    """Frequencies of the interior local maxima of a trace, ascending."""
    idx, _ = find_peaks(trace.s21_power)
    return trace.freq_hz[idx]


@dataclass(frozen=True)
class StokesPumpAssignment:
    omega_S: float
    omega_p: float
    Omega: float
    omega_anti_stokes: float
    anti_stokes_suppressed: bool


def stokes_pump_assignment(doublet: DoubletSpec) -> StokesPumpAssignment:
    """Assign the lower line to the Stokes wave and the upper to the pump.

    The anti-Stokes sideband sits at ``omega_p + Omega``. It is flagged as
    suppressed when the splitting exceeds three pump half-linewidths
    ``f_p / (2 Q_p)``.
    """
    lo, hi = sorted((doublet.f_S, doublet.f_p))
    split = hi - lo
    if split == 0.0:
        warnings.warn("degenerate doublet: pump and Stokes coincide, Omega = 0", RuntimeWarning)
    two_pi = 2.0 * math.pi
    return StokesPumpAssignment(
        omega_S=two_pi * lo,
        omega_p=two_pi * hi,
        Omega=two_pi * split,
        omega_anti_stokes=two_pi * (hi + split),
        anti_stokes_suppressed=split > 3.0 * hi / (2.0 * doublet.Q_p),
    )
