"""Dimension-counting laboratory for divergence-form elliptic operators.

Submodules: counting (exact combinatorics and bound envelopes), fields
(coefficient matrices, profiles, smoothing), geometry (conformal data and
weighted energies), pde (disk meshes and the Dirichlet solver), spectral
(boundary eigenvalues), dimension (solution bases, Gram growth, reports),
cli (batch commands).
"""

from . import counting, dimension, fields, geometry, pde, spectral

__version__ = "0.1.0"

__all__ = ["counting", "dimension", "fields", "geometry", "pde", "spectral"]
