"""Backend selection for the hot loops.

The compiled extension is used when importable; set
``BOHMARRIVAL_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("BOHMARRIVAL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels
    else:
        BACKEND = "cython"
else:
    _impl = _pykernels

CrankNicolsonStepper = _impl.CrankNicolsonStepper
integrate_ensemble = _impl.integrate_ensemble
COMPLETED, ABORTED, EXITED = _pykernels.COMPLETED, _pykernels.ABORTED, _pykernels.EXITED

__all__ = ["BACKEND", "CrankNicolsonStepper", "integrate_ensemble", "COMPLETED", "ABORTED", "EXITED"]
