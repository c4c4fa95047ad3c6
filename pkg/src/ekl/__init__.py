"""Eisenstein-Kronecker lattice series, critical Hecke L-values and their p-adic bookkeeping."""

__version__ = "0.1.0"

from .errors import EKLError  # noqa: E402,F401
