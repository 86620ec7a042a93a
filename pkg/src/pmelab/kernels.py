"""Backend selection for the stepping loops.

The compiled extension is used when it imports and ``PMELAB_PURE`` is not
set; otherwise the numpy implementation runs.  Both expose
``advance_1d`` / ``advance_2d`` with identical signatures.
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"numpy": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

DEFAULT = "numpy" if (_compiled is None or os.environ.get("PMELAB_PURE")) else "cython"


def get(backend=None):
    name = backend or DEFAULT
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
