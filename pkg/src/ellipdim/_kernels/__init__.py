"""Kernel backend selection: compiled extension if present, numpy otherwise.

Set ELLIPDIM_PURE_PY=1 to force the numpy fallback (used by the benchmark
and the backend-agreement tests).
"""

import os

from . import _ref

BACKEND = "numpy"

if not os.environ.get("ELLIPDIM_PURE_PY"):
    try:
        from . import _speedups

        BACKEND = "cython"
    except ImportError:
        _speedups = None
else:
    _speedups = None

if BACKEND == "cython":
    stiffness_triplets = _speedups.stiffness_triplets
    energy_gram = _speedups.energy_gram
else:
    stiffness_triplets = _ref.stiffness_triplets
    energy_gram = _ref.energy_gram

__all__ = ["BACKEND", "stiffness_triplets", "energy_gram", "_ref"]
