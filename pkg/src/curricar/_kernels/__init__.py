"""Hot-path kernels with a compiled core and a NumPy fallback.

The compiled extension (``_fast``, Cython) is preferred when present.
Set ``CURRICAR_BACKEND=numpy`` to force the fallback, or
``CURRICAR_BACKEND=cython`` to fail loudly if the extension is missing.
Results agree between backends to floating-point roundoff; within one
backend every kernel is deterministic.
"""

import os

from . import reference

HEAD_LINEAR = reference.HEAD_LINEAR
HEAD_TANH = reference.HEAD_TANH
HEAD_GAUSSIAN = reference.HEAD_GAUSSIAN
LOG_STD_MIN = reference.LOG_STD_MIN
LOG_STD_MAX = reference.LOG_STD_MAX

_requested = os.environ.get("CURRICAR_BACKEND", "auto").lower()

if _requested not in ("auto", "cython", "numpy"):
    raise ValueError(f"CURRICAR_BACKEND must be auto, cython or numpy, got {_requested!r}")

if _requested in ("auto", "cython"):
    try:
        from . import _fast as _impl

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = reference
        BACKEND = "numpy"
else:
    _impl = reference
    BACKEND = "numpy"

raycast = _impl.raycast
mlp_forward1 = _impl.mlp_forward1
adam_update = _impl.adam_update
