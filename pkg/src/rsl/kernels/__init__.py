"""Hot numerical kernels: compiled extension with a pure-Python fallback.

The Cython module ``_ckernels`` is used when it was built; otherwise (or
when the environment variable ``RSL_PURE_PYTHON`` is set to ``1``) the numpy
implementations in ``_pykernels`` are used. Both expose

    jacobi_eigh(a, tol=1e-12, max_sweeps=60) -> (w, v, sweeps)
    monodromy_batch(s_fine, mus) -> (len(mus), 2, 2) array
"""

import os

from . import _pykernels

if os.environ.get("RSL_PURE_PYTHON", "0") == "1":
    _impl = _pykernels
    COMPILED = False
else:
    try:
        from . import _ckernels as _impl
        COMPILED = True
    except ImportError:
        _impl = _pykernels
        COMPILED = False

jacobi_eigh = _impl.jacobi_eigh
monodromy_batch = _impl.monodromy_batch
BACKEND = "cython" if COMPILED else "python"

__all__ = ["jacobi_eigh", "monodromy_batch", "COMPILED", "BACKEND"]
