"""Backend selection for the per-triangle kernels.

The compiled extension is preferred; set ``CMCSTAB_PURE_PYTHON=1`` to force the
numpy implementation.  Both expose the same functions.
"""

import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("CMCSTAB_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from . import _ckernels
except ImportError:
    _ckernels = None

BACKEND = "cython" if _ckernels is not None else "python"
_impl = _ckernels if _ckernels is not None else _pykernels


def backends():
    """Available backend modules, keyed by name."""
    out = {"python": _pykernels}
    if _ckernels is not None:
        out["cython"] = _ckernels
    return out


def _prep(lengths):
    return np.ascontiguousarray(lengths, dtype=np.float64)


def triangle_areas(lengths):
    return _impl.triangle_areas(_prep(lengths))


def triangle_cotangents(lengths, areas):
    return _impl.triangle_cotangents(_prep(lengths), np.ascontiguousarray(areas, dtype=np.float64))


def assemble_cotan(tri, lengths, nv):
    return _impl.assemble_cotan(tri, _prep(lengths), int(nv))


def alpha_sum(tri, lengths, rho):
    return float(_impl.alpha_sum(tri, _prep(lengths), np.ascontiguousarray(rho, dtype=np.float64)))


def angle_sums(tri, lengths, nv):
    return _impl.angle_sums(tri, _prep(lengths), int(nv))
