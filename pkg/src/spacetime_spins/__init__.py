"""Circuit-to-spin-model compiler with exact and Monte Carlo ML decoding estimates."""

from .circuit import Circuit, builtin, parse, render, validate
from .pauli import SpacetimePauli
from .spacetime import GaugeBasis, find_gauge_symmetries, gauge_basis
from .spinmodel import GeneralPauli, IndependentXZ, SpinModel, build_hamiltonian, simplify

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "GaugeBasis",
    "GeneralPauli",
    "IndependentXZ",
    "SpacetimePauli",
    "SpinModel",
    "build_hamiltonian",
    "builtin",
    "find_gauge_symmetries",
    "gauge_basis",
    "parse",
    "render",
    "simplify",
    "validate",
]
