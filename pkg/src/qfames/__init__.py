"""Multi-state Gaussian-filtered spectral estimation of dominant eigenvalues,
their multiplicities and projected observables, with exact-simulation oracles."""
__version__ = "0.1.0"
