"""Hamiltonians, exact spectra and time evolution."""
from .builders import (
    SPECTRAL_MARGIN,
    build_illustrative,
    build_tfim,
    build_toric,
    normalize_spectrum,
    toric_lattice,
)
from .evolution import (
    BackendMismatch,
    DegenerateOverlap,
    EvolutionBackend,
    default_backend,
    evolve,
    imaginary_evolve,
    lanczos_expm,
)
from .pauli import PauliSumHamiltonian, PauliTerm, single_site
from .spectrum import DENSE_LIMIT, Spectrum, eigendecompose, energy_resolve

__all__ = [
    "SPECTRAL_MARGIN",
    "DENSE_LIMIT",
    "BackendMismatch",
    "DegenerateOverlap",
    "EvolutionBackend",
    "PauliSumHamiltonian",
    "PauliTerm",
    "Spectrum",
    "build_illustrative",
    "build_tfim",
    "build_toric",
    "default_backend",
    "eigendecompose",
    "energy_resolve",
    "evolve",
    "imaginary_evolve",
    "lanczos_expm",
    "normalize_spectrum",
    "single_site",
    "toric_lattice",
]
