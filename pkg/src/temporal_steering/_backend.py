"""Pick the compiled kernels when the extension is built, else numpy ones.

Setting ``TEMPORAL_STEERING_PURE_PYTHON=1`` forces the numpy kernels.
"""

import os

if os.environ.get("TEMPORAL_STEERING_PURE_PYTHON", "") not in ("", "0"):
    from ._pykernels import BACKEND, jacobi_eigvalsh, rk4_propagate
else:
    try:
        from ._kernels import BACKEND, jacobi_eigvalsh, rk4_propagate
    except ImportError:  # extension not compiled
        from ._pykernels import BACKEND, jacobi_eigvalsh, rk4_propagate

__all__ = ["BACKEND", "jacobi_eigvalsh", "rk4_propagate"]
