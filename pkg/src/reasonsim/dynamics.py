"""Kinematic bicycle model, its affine discretization and an RK4 integrator.

State order everywhere is ``[x, y, theta, v]`` and input order ``[a, delta]``.
The default model is referenced to the rear axle (yaw rate ``v tan(delta) / L``),
for which the discrete matrices below are the exact Jacobians of a
forward-Euler step. The centre-of-gravity slip-angle variant is available
through ``model="slip"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BicycleParams, ControlInput, VehicleState, normalize_angle

REAR_AXLE = "rear_axle"
SLIP = "slip"


class SteeringSingularityError(ValueError):
    pass


def _derivative(x, y, theta, v, a, delta, p: BicycleParams, model: str):
    if model == REAR_AXLE:
        return (
            v * math.cos(theta),
            v * math.sin(theta),
            v * math.tan(delta) / p.L,
            a,
        )
    if model == SLIP:
        beta = math.atan(p.l_r / p.L * math.tan(delta))
        return (
            v * math.cos(theta + beta),
            v * math.sin(theta + beta),
            v / p.l_r * math.sin(beta),
            a,
        )
    raise ValueError(f"unknown bicycle model {model!r}")


def continuous_derivative(
    state: VehicleState, u: ControlInput, p: BicycleParams, model: str = REAR_AXLE
) -> tuple[float, float, float, float]:
    """Return ``(xdot, ydot, thetadot, vdot)``."""
    return _derivative(state.x, state.y, state.theta, state.v, u.a, u.delta, p, model)


def yaw_rate(v: float, delta: float, p: BicycleParams) -> float:
    return v * math.tan(delta) / p.L


@dataclass(frozen=True)
class LinearizedModel:
    A_d: np.ndarray
    B_d: np.ndarray
    d_d: np.ndarray
    linearization_point: tuple
    Ts: float

    def predict(self, x, u) -> np.ndarray:
        return self.A_d @ np.asarray(x, float) + self.B_d @ np.asarray(u, float) + self.d_d


def affine_matrices(theta: float, v: float, delta: float, L: float, Ts: float):
    """A_d, B_d, d_d of the Euler-discretized rear-axle model about (theta, v, delta).

    Works on a raw (possibly unwrapped) heading so callers can linearize
    along a continuous heading sequence.
    """
    if abs(delta) >= math.pi / 2:
        raise SteeringSingularityError(f"steering singularity: |delta|={abs(delta)} >= pi/2")
    c, s = math.cos(theta), math.sin(theta)
    tan_d = math.tan(delta)
    cos2 = math.cos(delta) ** 2
    A = np.array(
        [
            [1.0, 0.0, -Ts * v * s, Ts * c],
            [0.0, 1.0, Ts * v * c, Ts * s],
            [0.0, 0.0, 1.0, Ts * tan_d / L],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    B = np.array(
        [
            [0.0, 0.0],
            [0.0, 0.0],
            [0.0, Ts * v / (L * cos2)],
            [Ts, 0.0],
        ]
    )
    d = np.array(
        [
            Ts * v * s * theta,
            -Ts * v * c * theta,
            -Ts * v * delta / (L * cos2),
            0.0,
        ]
    )
    return A, B, d


def linearize_discretize(
    state: VehicleState, u: ControlInput, p: BicycleParams, Ts: float | None = None
) -> LinearizedModel:
    Ts = p.Ts if Ts is None else Ts
    A, B, d = affine_matrices(state.theta, state.v, u.delta, p.L, Ts)
    return LinearizedModel(A, B, d, (state, u), Ts)


def euler_step(x, u, p: BicycleParams, Ts: float, model: str = REAR_AXLE) -> np.ndarray:
    """One forward-Euler step on raw arrays (no wrapping, no clamping)."""
    f = _derivative(x[0], x[1], x[2], x[3], u[0], u[1], p, model)
    return np.asarray(x, float) + Ts * np.asarray(f)


def _stopped_derivative(x, y, theta, v, a, delta, p, model):
    # A vehicle at rest cannot be pushed backwards by braking.
    if v <= 0.0:
        v = 0.0
        if a < 0.0:
            a = 0.0
    return _derivative(x, y, theta, v, a, delta, p, model)


def rk4_raw(x, u, p: BicycleParams, dt: float, model: str = REAR_AXLE, stop_at_zero: bool = True):
    """Classical RK4 step on a raw state tuple; returns a tuple."""
    f = _stopped_derivative if stop_at_zero else _derivative
    a, delta = u
    x0, y0, t0, v0 = x
    k1 = f(x0, y0, t0, v0, a, delta, p, model)
    h = 0.5 * dt
    k2 = f(x0 + h * k1[0], y0 + h * k1[1], t0 + h * k1[2], v0 + h * k1[3], a, delta, p, model)
    k3 = f(x0 + h * k2[0], y0 + h * k2[1], t0 + h * k2[2], v0 + h * k2[3], a, delta, p, model)
    k4 = f(x0 + dt * k3[0], y0 + dt * k3[1], t0 + dt * k3[2], v0 + dt * k3[3], a, delta, p, model)
    w = dt / 6.0
    return (
        x0 + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        y0 + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        t0 + w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
        v0 + w * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]),
    )


def step_rk4(
    state: VehicleState, u: ControlInput, p: BicycleParams, dt: float, model: str = REAR_AXLE
) -> VehicleState:
    if not dt > 0:
        raise ValueError("dt must be > 0")
    x, y, th, v = rk4_raw(state.as_array(), (u.a, u.delta), p, dt, model)
    return VehicleState(x, y, normalize_angle(th), max(v, 0.0))


def integrate(
    state: VehicleState,
    u: ControlInput,
    p: BicycleParams,
    duration: float,
    substeps: int = 10,
    model: str = REAR_AXLE,
) -> VehicleState:
    """Hold ``u`` for ``duration`` seconds using ``substeps`` RK4 steps."""
    dt = duration / substeps
    x = state.as_array()
    for _ in range(substeps):
        x = rk4_raw(x, (u.a, u.delta), p, dt, model)
        if x[3] < 0.0:
            x = (x[0], x[1], x[2], 0.0)
    return VehicleState(x[0], x[1], normalize_angle(x[2]), max(x[3], 0.0))
