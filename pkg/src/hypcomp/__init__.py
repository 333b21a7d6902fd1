"""Complementary series of free groups on (weighted) Cayley trees.

Set ``HYPCOMP_THREADS`` before the first import to cap BLAS and numba threads.
"""
import os as _os

_threads = _os.environ.get("HYPCOMP_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "NUMBA_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .conformal_density import Density, critical_exponent  # noqa: E402
from .errors import HypcompError  # noqa: E402
from .kernel_ops import gram_matrix, pair_energy, qs_pair  # noqa: E402
from .rep_space import CylinderFunction, apply_pi  # noqa: E402
from .tree_geometry import Cylinder, TreeModel, parse_word  # noqa: E402

__all__ = ["Cylinder", "CylinderFunction", "Density", "HypcompError", "TreeModel",
           "apply_pi", "critical_exponent", "gram_matrix", "pair_energy", "parse_word",
           "qs_pair"]
__version__ = "0.1.0"
