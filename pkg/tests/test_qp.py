import math

import numpy as np
import pytest

from oracles import qp_active_set, qp_enumerate, qp_value, random_qp
from reasonsim import _kernels_py, kernels

BACKENDS = [pytest.param(_kernels_py.solve_box_qp, id="python")]
if kernels.BACKEND == "cython":
    from reasonsim import _kernels

    BACKENDS.append(pytest.param(_kernels.solve_box_qp, id="cython"))


@pytest.fixture(params=BACKENDS)
def solve(request):
    return request.param


def test_clamped_scalar(solve):
    # min (u - 3)^2 = u^2 - 6u + 9  s.t. u <= 2
    x, _, res, ok = solve(np.array([[2.0]]), np.array([-6.0]), np.array([-10.0]), np.array([2.0]), np.zeros(1))
    assert ok and x[0] == 2.0 and res <= 1e-8


def test_interior_matches_linear_solve(solve):
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 21))
        M = rng.normal(size=(n, n))
        H = M @ M.T + np.eye(n)
        g = rng.normal(scale=0.1, size=n)
        direct = np.linalg.solve(H, -g)
        big = np.full(n, 1e6)
        x, _, _, ok = solve(H, g, -big, big, np.zeros(n))
        assert ok
        np.testing.assert_allclose(x, direct, atol=1e-8)


@pytest.mark.parametrize("seed", range(40))
def test_matches_enumeration(solve, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    H, g, lo, hi = random_qp(rng, n)
    _, ref = qp_enumerate(H, g, lo, hi)
    x, _, res, ok = solve(H, g, lo, hi, np.zeros(n))
    assert ok and res <= 1e-6
    assert np.all(x >= lo) and np.all(x <= hi)
    assert abs(qp_value(H, g, x) - ref) <= 1e-6


@pytest.mark.parametrize("seed", range(20))
def test_matches_active_set(solve, seed):
    rng = np.random.default_rng(500 + seed)
    n = int(rng.integers(9, 21))
    H, g, lo, hi = random_qp(rng, n)
    ref = qp_value(H, g, qp_active_set(H, g, lo, hi))
    x, _, res, ok = solve(H, g, lo, hi, np.zeros(n))
    assert ok and res <= 1e-6
    assert abs(qp_value(H, g, x) - ref) <= 1e-6


def test_oracles_agree_with_each_other():
    rng = np.random.default_rng(99)
    for _ in range(30):
        n = int(rng.integers(1, 7))
        H, g, lo, hi = random_qp(rng, n)
        _, v1 = qp_enumerate(H, g, lo, hi)
        v2 = qp_value(H, g, qp_active_set(H, g, lo, hi))
        assert v1 == pytest.approx(v2, abs=1e-9)


def test_max_iter_flags_non_convergence(solve):
    rng = np.random.default_rng(5)
    H, g, lo, hi = random_qp(rng, 12)
    x, it, res, ok = solve(H, g, lo, hi, np.zeros(12), 1e-8, 0)
    assert not ok and it == 0 and res > 1e-8
    assert np.all(x >= lo) and np.all(x <= hi)


def test_start_outside_box_is_projected(solve):
    H = np.eye(2)
    x, _, _, ok = solve(H, np.zeros(2), -np.ones(2), np.ones(2), np.array([5.0, -5.0]))
    assert ok
    np.testing.assert_allclose(x, 0.0, atol=1e-12)


def test_kkt_residual_helper():
    H = np.eye(1)
    assert _kernels_py.kkt_residual(H, np.array([-3.0]), np.array([0.0]), np.array([2.0]), np.array([2.0])) == 0.0
    assert math.isclose(
        _kernels_py.kkt_residual(H, np.array([-3.0]), np.array([0.0]), np.array([2.0]), np.array([1.0])), 1.0
    )
