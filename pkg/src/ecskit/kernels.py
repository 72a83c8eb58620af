"""Backend selection for the batched tensor kernels.

The compiled extension ``ecskit._ckernels`` is used when it is importable;
otherwise the numpy implementations in ``ecskit._pykernels`` are used.  Set
``ECSKIT_PURE_PYTHON=1`` to force the numpy path.
"""

from __future__ import annotations

import os

from . import _pykernels

NAMES = (
    "christoffel",
    "christoffel_derivative",
    "riemann",
    "lower_first",
    "weyl",
    "covariant_derivative4",
    "covariant_derivative2",
    "semisymmetry_max",
)


def _load_compiled():
    if os.environ.get("ECSKIT_PURE_PYTHON", "").strip() not in ("", "0"):
        return None
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


_compiled = _load_compiled()
BACKEND = "cython" if _compiled is not None else "python"


def backend_module(name=None):
    """Return the kernel module for ``name`` ('cython', 'python' or None=active)."""
    if name is None:
        name = BACKEND
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    return ["python"] + (["cython"] if _compiled is not None else [])


_active = backend_module()
christoffel = _active.christoffel
christoffel_derivative = _active.christoffel_derivative
riemann = _active.riemann
lower_first = _active.lower_first
weyl = _active.weyl
covariant_derivative4 = _active.covariant_derivative4
covariant_derivative2 = _active.covariant_derivative2
semisymmetry_max = _active.semisymmetry_max
