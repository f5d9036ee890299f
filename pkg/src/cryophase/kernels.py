"""Backend selection for the sweep kernels.

The compiled extension is preferred when importable; otherwise the
pure-Python fallback is used.  Set CRYOPHASE_FORCE_PYTHON=1 to force
the fallback (useful for benchmarking and debugging).  Both backends
produce bitwise-identical results.
"""

import os

if os.environ.get("CRYOPHASE_FORCE_PYTHON"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

pgs_sweep_1d = _impl.pgs_sweep_1d
pgs_sweep_2d = _impl.pgs_sweep_2d
