"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting
``REASONSIM_PURE_PYTHON=1`` forces the pure-Python implementation.
"""

import os

BACKEND = "python"

if os.environ.get("REASONSIM_PURE_PYTHON", "") not in ("", "0"):
    from ._kernels_py import lattice_astar, solve_box_qp
else:
    try:
        from ._kernels import lattice_astar, solve_box_qp

        BACKEND = "cython"
    except ImportError:
        from ._kernels_py import lattice_astar, solve_box_qp

__all__ = ["BACKEND", "lattice_astar", "solve_box_qp"]
