"""Transportation-solver backend selection.

The compiled extension is preferred; the pure-Python implementation is the
fallback when the extension was not built (or when SALBENCH_TRANSPORT=python
forces it, which the benchmark and the backend-parity tests rely on).
"""

import os

from . import _solver_py

if os.environ.get("SALBENCH_TRANSPORT", "").lower() == "python":
    solve_transportation = _solver_py.solve_transportation
    BACKEND = "python"
else:
    try:
        from . import _solver_cy

        solve_transportation = _solver_cy.solve_transportation
        BACKEND = "cython"
    except ImportError:
        solve_transportation = _solver_py.solve_transportation
        BACKEND = "python"

__all__ = ["solve_transportation", "BACKEND"]
