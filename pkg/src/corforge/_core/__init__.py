"""Hot kernels with a compiled (Cython) and a pure-numpy implementation.

The compiled module is used when it was built; ``CORFORGE_PURE_PYTHON=1``
forces the fallback. ``BACKEND`` names the active one.
"""

import os

from . import rk4_flow_py

BACKEND = "python"
rk4_flow = rk4_flow_py.rk4_flow

if os.environ.get("CORFORGE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _rk4 as _compiled
    except ImportError:
        pass
    else:
        rk4_flow = _compiled.rk4_flow
        BACKEND = "cython"

__all__ = ["BACKEND", "rk4_flow", "rk4_flow_py"]
