"""Periodic compressible Navier-Stokes-Fourier solver for truncated virial pressure laws."""

from .errors import (
    ConfigError,
    ConvergenceFailure,
    DomainError,
    FormatError,
    IndexOutOfRange,
    NegativeInput,
    NonPhysicalState,
    VirialNSFError,
)
from .statelaw import CoefficientFn, ThermoPoint, VirialLaw
from .laws import preset, reference_law

__all__ = [
    "CoefficientFn", "ThermoPoint", "VirialLaw", "preset", "reference_law",
    "VirialNSFError", "DomainError", "IndexOutOfRange", "NegativeInput",
    "ConvergenceFailure", "NonPhysicalState", "ConfigError", "FormatError",
]
