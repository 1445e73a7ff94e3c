"""Hot-kernel backend selection.

The compiled extension is used when it imports; otherwise, or when
``ACTIVEPRECISION_PURE=1`` is set, the numpy fallback is used. Both expose
``mod_matrix``, ``precision_matrix``, ``attention``, ``row_weighted_sum``
and ``gaussian_code``.
"""

import os

from . import _fallback as python_backend

try:
    from . import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("ACTIVEPRECISION_PURE", "") in ("", "0"):
    kernels = compiled_backend
else:
    kernels = python_backend


def available_backends() -> list[str]:
    names = ["python"]
    if compiled_backend is not None:
        names.append("cython")
    return names


def set_backend(name: str):
    """Switch the active kernels globally; returns the previous backend name."""
    global kernels
    previous = kernels.BACKEND
    if name == "python":
        kernels = python_backend
    elif name == "cython":
        if compiled_backend is None:
            raise ImportError("compiled kernels are not built")
        kernels = compiled_backend
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


def get_backend() -> str:
    return kernels.BACKEND


__all__ = ["kernels", "python_backend", "compiled_backend", "set_backend", "get_backend", "available_backends"]
