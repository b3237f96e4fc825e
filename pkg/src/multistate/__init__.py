"""Numerical toolkit for matrix-valued Schroedinger operators with first-order couplings.

Submodules: ``lattice`` (subspace semilattices), ``model`` (problem specs and
assumption checks), ``discretize`` (finite-difference operators), ``spectral``
(windowed eigensolvers, commutator forms, thresholds), ``dynamics``
(propagators and decay fits), ``scenarios`` and ``cli`` (experiment runner).
"""
from .errors import MultistateError

__version__ = "0.1.0"

__all__ = ["MultistateError", "__version__"]
