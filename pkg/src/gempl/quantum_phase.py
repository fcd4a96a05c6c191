"""
Minimal coupling to electromagnetic and gravitational vector potentials.

A nonrelativistic particle of charge ``q`` and mass ``m`` couples to both
potentials through ``p -> p - q A - m h``. Around a loop the resulting phase
is

    dphi_tot = (q Phi + m Phi_g) / hbar

with ``Phi = oint A . dl`` and ``Phi_g = oint h . dl``.

The gravitational phase also follows from the time holonomy of the metric,
``dt = (1/c) oint h_0i dx^i``, multiplied by the Compton frequency
``m c^2 / hbar``. The two routes agree when ``h_i = c h_0i``; that mapping is
used throughout.

For a rigidly rotating superconducting ring the rotation supplies
``h = Omega x r``, and fluxoid quantization ``dphi_tot = 2 pi n`` fixes the
magnetic flux through the ring. At ``n = 0`` this gives the London moment
``B = 2 m_e Omega / e``, directed against the rotation axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from gempl.constants import CODATA, PhysicalConstants
from gempl.errors import DomainError, SingularMetricError
from gempl.gem_field import ClosedCurve, line_integral_flux

__all__ = [
    "ParticleSpecies",
    "FluxPair",
    "HamiltonianBreakdown",
    "electron",
    "cooper_pair",
    "dewitt_momentum",
    "hamiltonian_terms",
    "total_ab_phase",
    "flux_pair",
    "metric_from_potential",
    "time_holonomy",
    "compton_phase",
    "london_moment",
    "fluxoid_solve",
    "local_gauge_check",
    "kinetic_momentum",
    "gauge_compensate",
]


@dataclass(frozen=True)
class ParticleSpecies:
    charge: float
    mass: float
    label: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise DomainError(f"particle mass must be positive, got {self.mass!r}")
        if not math.isfinite(self.charge):
            raise DomainError("particle charge must be finite")


def electron(constants: PhysicalConstants = CODATA) -> ParticleSpecies:
    return ParticleSpecies(-constants.e, constants.m_e, "electron")


def cooper_pair(constants: PhysicalConstants = CODATA) -> ParticleSpecies:
    """Cooper pair with charge magnitude ``2e`` and mass ``2 m_e``.

    The charge is taken positive, as in the fluxoid condition
    ``2e Phi / hbar + ...``; only its magnitude enters the phase formulas
    used here.
    """
    return ParticleSpecies(2.0 * constants.e, 2.0 * constants.m_e, "cooper_pair")


@dataclass(frozen=True)
class FluxPair:
    """Magnetic flux ``Phi`` (Wb) and gravito-magnetic flux ``Phi_g`` (m^2/s)."""

    Phi: float
    Phi_g: float

    def __post_init__(self):
        if not (math.isfinite(self.Phi) and math.isfinite(self.Phi_g)):
            raise DomainError("fluxes must be finite")


@dataclass(frozen=True)
class HamiltonianBreakdown:
    """Terms of ``(p - qA - mh)^2 / 2m + V`` expanded by coupling (J)."""

    H0: float
    H_pA: float
    H_ph: float
    H_Ah: float
    H_AA: float
    H_hh: float
    V: float
    total: float

    def parts_sum(self) -> float:
        return self.H0 + self.H_pA + self.H_ph + self.H_Ah + self.H_AA + self.H_hh


def _vec(v, name):
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise DomainError(f"{name} must be a 3-vector, got shape {a.shape}")
    return a


def dewitt_momentum(p, species: ParticleSpecies, A, h) -> np.ndarray:
    """Kinetic momentum ``p - q A - m h``."""
    return _vec(p, "p") - species.charge * _vec(A, "A") - species.mass * _vec(h, "h")


def hamiltonian_terms(p, species: ParticleSpecies, A, h, V: float = 0.0) -> HamiltonianBreakdown:
    """Expand the minimally coupled Hamiltonian into its interaction terms.

    ``H0 = p^2/2m + V``, ``H_pA = -(q/m) p.A``, ``H_ph = -p.h``,
    ``H_Ah = q A.h``, ``H_AA = q^2 A^2 / 2m``, ``H_hh = m h^2 / 2``.
    ``total`` is computed independently from the squared kinetic momentum.
    """
    p, A, h = _vec(p, "p"), _vec(A, "A"), _vec(h, "h")
    q, m = species.charge, species.mass
    pi = dewitt_momentum(p, species, A, h)
    return HamiltonianBreakdown(
        H0=float(p @ p / (2 * m) + V),
        H_pA=float(-(q / m) * (p @ A)),
        H_ph=float(-(p @ h)),
        H_Ah=float(q * (A @ h)),
        H_AA=float(q**2 * (A @ A) / (2 * m)),
        H_hh=float(m * (h @ h) / 2),
        V=float(V),
        total=float(pi @ pi / (2 * m) + V),
    )


def total_ab_phase(species: ParticleSpecies, fluxes: FluxPair, constants: PhysicalConstants = CODATA) -> float:
    """``q Phi / hbar + m Phi_g / hbar`` in radians."""
    return (species.charge * fluxes.Phi + species.mass * fluxes.Phi_g) / constants.hbar


def flux_pair(A_sampler, h_sampler, curve: ClosedCurve) -> FluxPair:
    """Both fluxes as loop integrals of their potentials around ``curve``.

    Either sampler may be ``None`` for a vanishing potential.
    """
    Phi = 0.0 if A_sampler is None else line_integral_flux(A_sampler, curve)
    Phi_g = 0.0 if h_sampler is None else line_integral_flux(h_sampler, curve)
    return FluxPair(Phi, Phi_g)


def metric_from_potential(h_sampler, constants: PhysicalConstants = CODATA):
    """Time-space metric components ``h_0i = h_i / c`` (dimensionless)."""

    def h0i(x):
        return np.asarray(h_sampler(x), dtype=float) / constants.c

    return h0i


def time_holonomy(
    metric: Callable[[np.ndarray], np.ndarray],
    curve: ClosedCurve,
    constants: PhysicalConstants = CODATA,
    exact_g00: Callable[[np.ndarray], np.ndarray] | None = None,
) -> float:
    """Synchronisation defect around a closed loop (s).

    Without ``exact_g00`` the weak-field form ``(1/c) oint h_0i dx^i`` is
    returned. With it, ``-(1/c) oint (g_0i / g_00) dx^i`` with
    ``g_0i = h_0i``; the two agree to first order when ``g_00 = -1 + O(h)``.
    """
    if exact_g00 is None:
        return line_integral_flux(metric, curve) / constants.c

    x, _ = curve.samples()
    g00 = np.asarray(exact_g00(x), dtype=float)
    scale = max(1.0, float(np.max(np.abs(g00))))
    if np.any(np.abs(g00) <= 1e-12 * scale):
        raise SingularMetricError("g_00 vanishes on the holonomy curve")

    def ratio(pts):
        return np.asarray(metric(pts), dtype=float) / np.asarray(exact_g00(pts), dtype=float)[..., None]

    return -line_integral_flux(ratio, curve) / constants.c


def compton_phase(dt: float, mass: float, constants: PhysicalConstants = CODATA) -> float:
    """Phase ``(m c^2 / hbar) dt`` accumulated over a time defect ``dt``."""
    return mass * constants.c**2 / constants.hbar * dt


def london_moment(omega_rot: float, constants: PhysicalConstants = CODATA) -> float:
    """London-moment field magnitude ``2 m_e Omega / e`` (T)."""
    return 2.0 * constants.m_e * omega_rot / constants.e


def fluxoid_solve(ring_radius: float, omega_rot: float, n: int, constants: PhysicalConstants = CODATA) -> float:
    """Magnetic flux through a rotating superconducting ring (Wb).

    Solves ``2e Phi / hbar + 2 m_e Phi_g / hbar = 2 pi n`` with the rigid
    rotation flux ``Phi_g = 2 pi R^2 Omega``.
    """
    if not ring_radius > 0:
        raise DomainError(f"ring_radius must be positive, got {ring_radius!r}")
    if int(n) != n:
        raise DomainError(f"fluxoid number must be an integer, got {n!r}")
    pair = cooper_pair(constants)
    phi_g = 2.0 * math.pi * ring_radius**2 * omega_rot
    return (2.0 * math.pi * int(n) * constants.hbar - pair.mass * phi_g) / pair.charge


def local_gauge_check(psi, phase_fn, points) -> float:
    """Largest change of ``|psi|^2`` under ``psi -> psi exp(i phi)`` over ``points``."""
    pts = np.asarray(points, dtype=float)
    a = np.asarray(psi(pts), dtype=complex)
    b = a * np.exp(1j * np.asarray(phase_fn(pts), dtype=float))
    return float(np.max(np.abs(np.abs(b) ** 2 - np.abs(a) ** 2)))


def _gradient4(f, x, step):
    """Fourth-order central-difference gradient of a scalar field."""
    g = None
    for i in range(3):
        e = np.zeros(3)
        e[i] = step
        d = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12.0 * step)
        if g is None:
            g = np.empty(np.shape(d) + (3,), dtype=np.result_type(d, float))
        g[..., i] = d
    return g


def kinetic_momentum(
    psi,
    A,
    h,
    species: ParticleSpecies,
    points,
    step: float,
    constants: PhysicalConstants = CODATA,
) -> np.ndarray:
    """Local kinetic momentum ``[(hbar/i) grad - q A - m h] psi / psi``.

    The gradient uses a fourth-order central stencil of width ``step``.
    Returns a complex array shaped like ``points``.
    """
    pts = np.asarray(points, dtype=float)

    def f(x):
        return np.asarray(psi(x), dtype=complex)

    val = f(pts)
    grad = _gradient4(f, pts, step)
    op = (constants.hbar / 1j) * grad - (species.charge * np.asarray(A(pts)) + species.mass * np.asarray(h(pts))) * val[..., None]
    return op / val[..., None]


def gauge_compensate(psi, A, h, lam, mu, species: ParticleSpecies, step: float, constants: PhysicalConstants = CODATA):
    """Apply ``A -> A + grad lam``, ``h -> h + grad mu`` and the compensating phase.

    Returns the transformed ``(psi, A, h)`` callables. The wavefunction picks
    up ``exp(i (q lam + m mu) / hbar)``, which leaves
    :func:`kinetic_momentum` unchanged.
    """
    q, m, hbar = species.charge, species.mass, constants.hbar

    def psi2(x):
        return np.asarray(psi(x), dtype=complex) * np.exp(1j * (q * np.asarray(lam(x)) + m * np.asarray(mu(x))) / hbar)

    def A2(x):
        return np.asarray(A(x)) + _gradient4(lambda y: np.asarray(lam(y), dtype=float), np.asarray(x, dtype=float), step)

    def h2(x):
        return np.asarray(h(x)) + _gradient4(lambda y: np.asarray(mu(y), dtype=float), np.asarray(x, dtype=float), step)

    return psi2, A2, h2
