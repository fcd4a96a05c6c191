"""Weak-field gravito-electromagnetism, Aharonov-Bohm phases, cavity spectra
and microwave parametric-oscillator thresholds."""

from gempl.constants import (
    CODATA,
    PAPER,
    PhysicalConstants,
    get_constants,
    gravitational_permeability,
    gravitational_permittivity,
)

__version__ = "0.1.0"

__all__ = [
    "CODATA",
    "PAPER",
    "PhysicalConstants",
    "get_constants",
    "gravitational_permeability",
    "gravitational_permittivity",
    "__version__",
]
