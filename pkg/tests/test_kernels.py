"""The compiled and pure-Python kernels must agree."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from oracles import random_lattice_instance, random_qp
from reasonsim import _kernels_py, kernels
from reasonsim.core import Goal
from reasonsim.planner import NoPathError, search

needs_ext = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


def test_env_var_forces_python_fallback():
    code = "from reasonsim import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, REASONSIM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_ext
@pytest.mark.parametrize("seed", range(15))
def test_astar_backends_identical(seed):
    from reasonsim import _kernels

    rng = np.random.default_rng(seed)
    lattice, fld, prims, w, start, start_k, (gx, gy) = random_lattice_instance(rng)
    results = []
    for fn in (_kernels.lattice_astar, _kernels_py.lattice_astar):
        try:
            results.append(search(start, start_k, Goal(gx, gy, 0.3), fld, prims, w, lattice, backend=fn))
        except NoPathError:
            results.append(None)
    assert results[0] == results[1]


@needs_ext
@pytest.mark.parametrize("seed", range(15))
def test_qp_backends_agree(seed):
    from reasonsim import _kernels

    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 21))
    H, g, lo, hi = random_qp(rng, n)
    xc, _, rc, okc = _kernels.solve_box_qp(H, g, lo, hi, np.zeros(n), 1e-10, 100)
    xp, _, rp, okp = _kernels_py.solve_box_qp(H, g, lo, hi, np.zeros(n), 1e-10, 100)
    assert okc and okp
    np.testing.assert_allclose(xc, xp, atol=1e-8)


@needs_ext
def test_astar_unreachable_returns_inf():
    from reasonsim import _kernels

    rng = np.random.default_rng(0)
    lattice, fld, prims, w, start, start_k, _ = random_lattice_instance(rng)
    fld.blocked[:] = True
    a = prims.arrays()
    args = (
        lattice.nx, lattice.ny, lattice.num_headings, len(prims.curvatures), lattice.ox, lattice.oy,
        lattice.resolution, a["end_dix"], a["end_diy"], a["end_ih"], a["prim_k"], a["prim_len"],
        a["sdx"], a["sdy"], a["kappa"], fld.x0, fld.y0, fld.resolution, fld.penalty,
        fld.prohibited.astype(np.uint8), fld.blocked.astype(np.uint8), *map(float, w),
        start.ix, start.iy, start.ih, start_k, 100.0, 100.0, 0.3, 10_000,
    )
    for fn in (_kernels.lattice_astar, _kernels_py.lattice_astar):
        cost, states, prims_out, _ = fn(*args)
        assert math.isinf(cost) and len(states) == 0 and len(prims_out) == 0
