"""Hot loops with a compiled core and a NumPy fallback.

The compiled extension is used when it imports; setting ``CAVITY_XY_PURE=1``
forces the fallback.
"""

import os

from ._rk4_py import rk4_evolve as rk4_evolve_py

try:
    from ._rk4 import rk4_evolve as rk4_evolve_compiled
except ImportError:  # extension not built
    rk4_evolve_compiled = None

if rk4_evolve_compiled is not None and not os.environ.get("CAVITY_XY_PURE"):
    rk4_evolve = rk4_evolve_compiled
    BACKEND = "compiled"
else:
    rk4_evolve = rk4_evolve_py
    BACKEND = "python"

__all__ = ["rk4_evolve", "rk4_evolve_py", "rk4_evolve_compiled", "BACKEND"]
