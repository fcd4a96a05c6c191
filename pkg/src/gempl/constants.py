"""
Physical constants in SI units.

Two constant sets are provided. ``CODATA`` carries the CODATA 2018 values
(via :mod:`scipy.constants`). ``PAPER`` replaces Newton's constant and the
speed of light with the rounded values G = 6.67e-11 and c = 3.00e8 so that
three-significant-figure results print exactly as they are usually quoted.

The gravitational analogs of the vacuum permittivity and permeability,

    eps_g = 1 / (4 pi G)
    mu_g  = 4 pi G / c**2

are stored on every constant set, so ``mu_g * eps_g * c**2 == 1``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import scipy.constants as sc

from gempl.errors import ConfigError, DomainError

__all__ = [
    "PhysicalConstants",
    "CODATA",
    "PAPER",
    "ENV_VAR",
    "get_constants",
    "gravitational_permittivity",
    "gravitational_permeability",
]

ENV_VAR = "GEMPL_CONSTANTS"


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return value


def gravitational_permittivity(G: float) -> float:
    """Gravitational analog of the electric permittivity, ``1/(4 pi G)``."""
    G = _check_positive("G", G)
    return 1.0 / (4.0 * math.pi * G)


def gravitational_permeability(G: float, c: float) -> float:
    """Gravitational analog of the magnetic permeability, ``4 pi G / c**2``."""
    G = _check_positive("G", G)
    c = _check_positive("c", c)
    return 4.0 * math.pi * G / c**2


@dataclass(frozen=True)
class PhysicalConstants:
    """Immutable set of SI constants.

    ``eps_g`` and ``mu_g`` are derived from ``G`` and ``c`` on construction
    and cannot be passed in.
    """

    G: float
    c: float
    hbar: float
    e: float
    m_e: float
    mu_0: float
    mode: str = "custom"
    eps_g: float = field(init=False)
    mu_g: float = field(init=False)

    def __post_init__(self):
        for name in ("G", "c", "hbar", "e", "m_e", "mu_0"):
            _check_positive(name, getattr(self, name))
        object.__setattr__(self, "eps_g", gravitational_permittivity(self.G))
        object.__setattr__(self, "mu_g", gravitational_permeability(self.G, self.c))

    @property
    def eps_0(self) -> float:
        return 1.0 / (self.mu_0 * self.c**2)

    @property
    def h(self) -> float:
        """Planck constant."""
        return 2.0 * math.pi * self.hbar


CODATA = PhysicalConstants(
    G=sc.G,
    c=sc.c,
    hbar=sc.hbar,
    e=sc.e,
    m_e=sc.m_e,
    mu_0=sc.mu_0,
    mode="codata",
)

PAPER = PhysicalConstants(
    G=6.67e-11,
    c=3.00e8,
    hbar=sc.hbar,
    e=sc.e,
    m_e=sc.m_e,
    mu_0=sc.mu_0,
    mode="paper",
)

_MODES = {"codata": CODATA, "paper": PAPER}


def get_constants(mode: str | None = None) -> PhysicalConstants:
    """Return the constant set named by ``mode``.

    With ``mode=None`` the ``GEMPL_CONSTANTS`` environment variable is
    consulted, falling back to CODATA.
    """
    if mode is None:
        mode = os.environ.get(ENV_VAR, "codata")
    key = mode.strip().lower()
    try:
        return _MODES[key]
    except KeyError:
        raise ConfigError(
            f"unknown constants mode {mode!r}; expected one of {sorted(_MODES)}"
        ) from None
