import math

import numpy as np
import pytest

from reasonsim.core import BicycleParams, ControlInput, VehicleState
from reasonsim.dynamics import affine_matrices, integrate
from reasonsim.mpc import (
    MpcWeights,
    ReferenceExhaustedError,
    build_qp,
    compute_errors,
    mpc_step,
    project,
    reference_window,
    solve_qp,
    stage_weight,
)
from reasonsim.planner import ReferencePath

P = BicycleParams()
W = MpcWeights()


def straight_path(v=8.0, y=0.0, length=400.0):
    xs = np.arange(0.0, length, 0.5)
    samples = np.column_stack([xs, np.full_like(xs, y), np.zeros_like(xs), np.full_like(xs, v)])
    return ReferencePath(0, samples, xs.copy(), 0.0, [])


def lane_change_path(offset=3.5, v=8.0):
    xs = np.arange(0.0, 200.0, 0.5)
    ys = offset / (1.0 + np.exp(-(xs - 20.0) / 3.0))
    th = np.arctan(np.gradient(ys, xs))
    s = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(xs), np.diff(ys)))])
    return ReferencePath(1, np.column_stack([xs, ys, th, np.full_like(xs, v)]), s, 0.0, [])


# errors


def test_errors_identity():
    assert compute_errors(VehicleState(3, 4, 0.5, 6), (3, 4, 0.5, 6)) == (0.0, 0.0, (0.0, 0.0))


def test_errors_left_offset():
    e_perp, e_par, _ = compute_errors(VehicleState(0, 1, 0, 0), (0, 0, 0, 0))
    assert (e_perp, e_par) == (1.0, 0.0)


def test_errors_rotated_reference():
    e_perp, e_par, _ = compute_errors(VehicleState(1, 0, math.pi / 2, 0), (0, 0, math.pi / 2, 0))
    assert e_perp == pytest.approx(-1.0, abs=1e-15)
    assert e_par == pytest.approx(0.0, abs=1e-15)


def test_heading_error_wraps():
    _, _, (e_th, e_v) = compute_errors(VehicleState(0, 0, math.pi - 0.1, 2), (0, 0, -math.pi + 0.1, 3))
    assert e_th == pytest.approx(-0.2, abs=1e-12)
    assert e_v == -1


# weights


def test_weight_validation():
    with pytest.raises(ValueError):
        MpcWeights(N=1)
    with pytest.raises(ValueError):
        MpcWeights(R=np.diag([0.0, 1.0]))
    with pytest.raises(ValueError):
        MpcWeights(Q_thetav=np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        MpcWeights(Q_perp=-1.0)


# QP construction


def _setup(rng, N=6):
    x0 = np.array([1.0, -0.3, 0.1, 5.0])
    window = np.array([[1.0 + 0.5 * k, 0.05 * k, 0.02 * k, 5.0 + 0.1 * k] for k in range(N + 1)])
    models = [affine_matrices(window[k, 2], window[k, 3], 0.0, P.L, P.Ts) for k in range(N)]
    u_prev = ControlInput(0.3, -0.05)
    return x0, window, models, u_prev


def _explicit_cost(x0, window, models, w, u_prev, U):
    """Direct evaluation of the tracking objective by forward simulation."""
    U = U.reshape(-1, 2)
    N = len(models)
    x = x0.copy()
    total = 0.0
    prev = np.array([u_prev.a, u_prev.delta])
    for k in range(N + 1):
        e_perp, e_par, (e_th, e_v) = compute_errors(x, window[k])
        e_th = x[2] - window[k, 2]
        if k < N:
            total += w.Q_perp * e_perp**2 + w.Q_par * e_par**2
            total += np.array([e_th, e_v]) @ w.Q_thetav @ np.array([e_th, e_v])
            total += U[k] @ w.R @ U[k] + (U[k] - prev) @ w.R_d @ (U[k] - prev)
            prev = U[k]
            A, B, d = models[k]
            x = A @ x + B @ U[k] + d
        else:
            e = np.array([e_par, e_perp, e_th, e_v])
            total += e @ w.Q_f @ e
    return total


def test_objective_equals_explicit_cost():
    rng = np.random.default_rng(1)
    x0, window, models, u_prev = _setup(rng)
    qp = build_qp(x0, window, models, W, u_prev, P)
    for _ in range(10):
        U = rng.normal(size=12)
        assert qp.objective(U) == pytest.approx(_explicit_cost(x0, window, models, W, u_prev, U), rel=1e-10)


def test_hessian_symmetric_positive_definite():
    x0, window, models, u_prev = _setup(None)
    qp = build_qp(x0, window, models, W, u_prev, P)
    np.testing.assert_array_equal(qp.H, qp.H.T)
    assert np.linalg.eigvalsh(qp.H).min() > 0
    assert np.all(qp.lower <= qp.upper)


def test_single_step_reduction():
    x0 = np.array([0.0, 0.2, 0.0, 4.0])
    window = np.array([[0.0, 0.0, 0.0, 4.0], [0.4, 0.0, 0.0, 4.0]])
    A, B, d = affine_matrices(0.0, 4.0, 0.0, P.L, P.Ts)
    u_prev = ControlInput(0.1, 0.02)
    qp = build_qp(x0, window, [(A, B, d)], W, u_prev, P)
    Qf = np.asarray(W.Q_f)  # heading 0: state (x, y) is already (par, perp)
    r1 = A @ x0 + d - window[1]
    H = 2 * B.T @ Qf @ B + 2 * W.R + 2 * W.R_d
    g = 2 * B.T @ Qf @ r1 - 2 * W.R_d @ np.array([0.1, 0.02])
    np.testing.assert_allclose(qp.H, H + 1e-8 * np.eye(2), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(qp.g, g, rtol=1e-12, atol=1e-15)


def test_window_too_short():
    x0, window, models, u_prev = _setup(None)
    with pytest.raises(ReferenceExhaustedError, match="reference exhausted"):
        build_qp(x0, window[:3], models, W, u_prev, P)


def test_zero_error_gives_zero_controls():
    path = straight_path(v=6.0)
    window = reference_window(path, 10.0, W.N, P.Ts)
    models = [affine_matrices(0.0, 6.0, 0.0, P.L, P.Ts) for _ in range(W.N)]
    qp = build_qp(window[0], window, models, W, ControlInput(), P)
    sol = solve_qp(qp)
    assert sol.converged
    assert np.abs(sol.controls).max() < 1e-6


def test_scaling_invariance():
    x0, window, models, u_prev = _setup(None)
    base = solve_qp(build_qp(x0, window, models, W, u_prev, P))
    for lam in (0.5, 2.0, 10.0):
        sol = solve_qp(build_qp(x0, window, models, W.scaled(lam), u_prev, P))
        np.testing.assert_allclose(sol.controls, base.controls, atol=1e-6)


def test_stage_weight_is_rotation_invariant_in_path_frame():
    Q = stage_weight(math.pi / 2, W)
    # along +y is parallel, along x is perpendicular for a heading of pi/2
    assert Q[1, 1] == pytest.approx(W.Q_par)
    assert Q[0, 0] == pytest.approx(W.Q_perp)


# receding horizon step


def test_equilibrium_step():
    path = straight_path()
    u, sol, _ = mpc_step(VehicleState(10.0, 0.0, 0.0, 8.0), path, 0.0, W, P, ControlInput())
    assert sol.converged
    assert abs(u.a) < 0.05 and abs(u.delta) < 0.01


def test_zero_cap_brakes_to_stop():
    path = straight_path()
    st = VehicleState(0.0, 0.0, 0.0, 6.0)
    u = ControlInput()
    prog = 0.0
    while st.v > 0.0:
        u, sol, prog = mpc_step(st, path, prog, W, P, u, speed_cap=0.0)
        assert u.a < 0.0
        st = integrate(st, u, P, P.Ts)
    assert st.v == 0.0


def test_lane_change_steers_left():
    path = lane_change_path()
    u, _, _ = mpc_step(VehicleState(16.0, 0.6, 0.0, 8.0), path, 0.0, W, P, ControlInput())
    assert u.delta > 0.0


def test_controls_within_bounds_and_progress_monotone():
    path = lane_change_path()
    st = VehicleState(0.0, -1.0, 0.3, 0.0)
    u, prog = ControlInput(), 0.0
    for _ in range(150):
        u, sol, nxt = mpc_step(st, path, prog, W, P, u)
        assert nxt >= prog
        assert np.all(sol.controls >= [P.a_min, -P.delta_max]) and np.all(sol.controls <= [P.a_max, P.delta_max])
        prog = nxt
        st = integrate(st, u, P, P.Ts)


def test_projection_monotone():
    path = straight_path()
    assert project(path, 10.2, 0.3, 0.0) == pytest.approx(10.2)
    assert project(path, 5.0, 0.0, 12.0) == 12.0


def test_window_respects_cap_and_end():
    path = straight_path(length=5.0)
    rows = reference_window(path, 4.0, 10, 0.1, speed_cap=2.0)
    assert np.all(rows[:, 3] <= 2.0)
    assert rows[-1, 0] == path.samples[-1, 0]


@pytest.mark.parametrize("v0", [0.0, 4.0, 8.0])
def test_closed_loop_straight_tracking(v0):
    path = straight_path()
    st = VehicleState(0.0, 0.5, 0.0, v0)
    u, prog = ControlInput(), 0.0
    errs = []
    for _ in range(50):
        u, _, prog = mpc_step(st, path, prog, W, P, u)
        st = integrate(st, u, P, P.Ts)
        errs.append(st.y)
    errs = np.array(errs)
    assert np.abs(errs[-1]) < 0.05
    assert np.abs(errs).max() <= 0.6
    assert errs.min() > -0.05  # no meaningful overshoot to the other side
