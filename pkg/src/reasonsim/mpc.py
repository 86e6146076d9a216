"""Linear time-varying MPC for reference-path tracking.

The affine bicycle model is linearized along a window of reference poses
and condensed into a QP over the stacked controls ``[a_0, delta_0, ...]``,
which is solved with the box-constrained projected Newton kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import BicycleParams, ControlInput, VehicleState, normalize_angle
from .dynamics import affine_matrices
from .planner import ReferencePath

HESSIAN_EPS = 1e-8


class ReferenceExhaustedError(ValueError):
    pass


def _psd(m) -> bool:
    m = np.asarray(m, float)
    return bool(np.allclose(m, m.T) and np.linalg.eigvalsh(m).min() >= -1e-12)


@dataclass(frozen=True, eq=False)
class MpcWeights:
    Q_perp: float = 10.0
    Q_par: float = 1.0
    Q_thetav: np.ndarray = field(default_factory=lambda: np.diag([5.0, 2.0]))
    R: np.ndarray = field(default_factory=lambda: np.diag([0.5, 5.0]))
    R_d: np.ndarray = field(default_factory=lambda: np.diag([0.5, 10.0]))
    # terminal weight on path-frame error [e_par, e_perp, e_theta, e_v]
    Q_f: np.ndarray = field(default_factory=lambda: 2.0 * np.diag([1.0, 10.0, 5.0, 2.0]))
    N: int = 20

    def __post_init__(self):
        if not (self.Q_perp >= 0 and self.Q_par >= 0):
            raise ValueError("Q_perp and Q_par must be >= 0")
        for name in ("Q_thetav", "R", "R_d", "Q_f"):
            if not _psd(getattr(self, name)):
                raise ValueError(f"{name} must be symmetric positive semi-definite")
        if np.linalg.eigvalsh(np.asarray(self.R, float)).min() <= 0:
            raise ValueError("R must be positive definite")
        if self.N < 2:
            raise ValueError("N must be >= 2")

    def scaled(self, lam: float) -> "MpcWeights":
        return MpcWeights(
            lam * self.Q_perp, lam * self.Q_par, lam * np.asarray(self.Q_thetav),
            lam * np.asarray(self.R), lam * np.asarray(self.R_d), lam * np.asarray(self.Q_f), self.N,
        )


@dataclass(frozen=True)
class QpProblem:
    H: np.ndarray
    g: np.ndarray
    const: float
    lower: np.ndarray
    upper: np.ndarray
    F: np.ndarray  # (N+1, 4) free response
    G: np.ndarray  # (N+1, 4, 2N) control sensitivity

    def objective(self, U) -> float:
        U = np.asarray(U, float)
        H = self.H - HESSIAN_EPS * np.eye(self.H.shape[0])
        return 0.5 * float(U @ H @ U) + float(self.g @ U) + self.const

    def predict(self, U) -> np.ndarray:
        return self.F + self.G @ np.asarray(U, float)


@dataclass(frozen=True)
class MpcSolution:
    controls: np.ndarray  # (N, 2)
    predicted_states: np.ndarray  # (N+1, 4)
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool


def compute_errors(state, ref_sample):
    """Tracking errors of ``state`` against a reference ``(x, y, theta, v)``.

    Returns ``(e_perp, e_par, (e_theta, e_v))`` with the position error
    resolved in the reference frame; e_perp is positive to the left.
    """
    x, y, th, v = state.as_array() if isinstance(state, VehicleState) else state
    xr, yr, thr, vr = ref_sample
    dx, dy = x - xr, y - yr
    c, s = math.cos(thr), math.sin(thr)
    e_par = c * dx + s * dy
    e_perp = -s * dx + c * dy
    return e_perp, e_par, (normalize_angle(th - thr), v - vr)


def _frame(theta_ref: float) -> np.ndarray:
    c, s = math.cos(theta_ref), math.sin(theta_ref)
    return np.array([[c, s], [-s, c]])


def stage_weight(theta_ref: float, w: MpcWeights) -> np.ndarray:
    P = _frame(theta_ref)
    Q = np.zeros((4, 4))
    Q[:2, :2] = P.T @ np.diag([w.Q_par, w.Q_perp]) @ P
    Q[2:, 2:] = w.Q_thetav
    return Q


def terminal_weight(theta_ref: float, w: MpcWeights) -> np.ndarray:
    T = np.eye(4)
    T[:2, :2] = _frame(theta_ref)
    return T.T @ np.asarray(w.Q_f, float) @ T


def build_qp(
    x0,
    window: np.ndarray,
    models,
    w: MpcWeights,
    u_prev: ControlInput,
    p: BicycleParams,
) -> QpProblem:
    """Condense the tracking cost under the affine dynamics.

    ``window`` holds N+1 reference rows ``(x, y, theta, v)`` and ``models``
    N triples ``(A, B, d)``. ``x0`` is a raw state with heading on the same
    branch as ``window[0]``. The rate term anchors its first difference at
    the previously applied control.
    """
    N = len(models)
    window = np.asarray(window, float)
    if window.shape[0] < N + 1:
        raise ReferenceExhaustedError("reference exhausted")
    n = 2 * N
    F = np.zeros((N + 1, 4))
    G = np.zeros((N + 1, 4, n))
    F[0] = x0
    for k, (A, B, d) in enumerate(models):
        F[k + 1] = A @ F[k] + d
        G[k + 1] = A @ G[k]
        G[k + 1, :, 2 * k : 2 * k + 2] += B

    H = np.zeros((n, n))
    g = np.zeros(n)
    const = 0.0
    for k in range(N + 1):
        Q = terminal_weight(window[k, 2], w) if k == N else stage_weight(window[k, 2], w)
        r = F[k] - window[k, :4]
        QG = Q @ G[k]
        H += 2.0 * G[k].T @ QG
        g += 2.0 * QG.T @ r
        const += float(r @ Q @ r)

    R = np.asarray(w.R, float)
    Rd = np.asarray(w.R_d, float)
    H += 2.0 * np.kron(np.eye(N), R)
    D = np.eye(n) - np.eye(n, k=-2)
    Rd_bar = np.kron(np.eye(N), Rd)
    e = np.zeros(n)
    e[:2] = (u_prev.a, u_prev.delta)
    H += 2.0 * D.T @ Rd_bar @ D
    g += -2.0 * D.T @ Rd_bar @ e
    const += float(e @ Rd_bar @ e)

    H = 0.5 * (H + H.T) + HESSIAN_EPS * np.eye(n)
    lower = np.tile([p.a_min, p.delta_min], N)
    upper = np.tile([p.a_max, p.delta_max], N)
    return QpProblem(H, g, const, lower, upper, F, G)


def solve_qp(qp: QpProblem, tol: float = 1e-8, max_iter: int = 100, x0=None, backend=None) -> MpcSolution:
    fn = backend or kernels.solve_box_qp
    n = qp.g.shape[0]
    start = np.zeros(n) if x0 is None else np.asarray(x0, float)
    U, iters, res, ok = fn(qp.H, qp.g, qp.lower, qp.upper, start, tol, max_iter)
    U = np.asarray(U)
    return MpcSolution(
        controls=U.reshape(-1, 2),
        predicted_states=qp.predict(U),
        objective=qp.objective(U),
        kkt_residual=float(res),
        iterations=int(iters),
        converged=bool(ok),
    )


def _interp_pose(path: ReferencePath, s: float):
    S = path.s
    if s <= S[0]:
        return path.samples[0].copy()
    if s >= S[-1]:
        return path.samples[-1].copy()
    i = int(np.searchsorted(S, s, side="right")) - 1
    ds = S[i + 1] - S[i]
    t = (s - S[i]) / ds if ds > 0 else 0.0
    return path.samples[i] + t * (path.samples[i + 1] - path.samples[i])


def project(path: ReferencePath, x: float, y: float, progress: float, lookahead: int = 80) -> float:
    """Arc length of the closest path point at or beyond ``progress``."""
    S = path.s
    i0 = max(int(np.searchsorted(S, progress, side="right")) - 1, 0)
    i1 = min(i0 + lookahead, len(S) - 1)
    pts = path.samples[i0 : i1 + 1, :2]
    j = i0 + int(np.argmin(np.hypot(pts[:, 0] - x, pts[:, 1] - y)))
    best_s, best_d = S[j], math.hypot(path.samples[j, 0] - x, path.samples[j, 1] - y)
    for a in (j - 1, j):
        if a < i0 or a + 1 > len(S) - 1:
            continue
        p0 = path.samples[a, :2]
        seg = path.samples[a + 1, :2] - p0
        L2 = float(seg @ seg)
        if L2 == 0.0:
            continue
        t = min(max(float((np.array([x, y]) - p0) @ seg) / L2, 0.0), 1.0)
        q = p0 + t * seg
        d = math.hypot(q[0] - x, q[1] - y)
        if d < best_d:
            best_d, best_s = d, S[a] + t * math.sqrt(L2)
    return max(float(best_s), progress)


def reference_window(path: ReferencePath, s0: float, N: int, Ts: float, speed_cap: float | None = None):
    """N+1 reference rows advancing along the path at the (capped) reference speed."""
    rows = np.zeros((N + 1, 4))
    s = s0
    for k in range(N + 1):
        pose = _interp_pose(path, s)
        v = pose[3] if speed_cap is None else min(pose[3], max(speed_cap, 0.0))
        rows[k] = (pose[0], pose[1], pose[2], v)
        s = min(s + v * Ts, path.s[-1])
    return rows


def mpc_step(
    x0: VehicleState,
    path: ReferencePath,
    progress: float,
    w: MpcWeights,
    p: BicycleParams,
    u_prev: ControlInput,
    speed_cap: float | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
):
    """One receding-horizon step.

    Returns ``(control, solution, progress)``. A non-converged solve falls
    back to the previous control.
    """
    if len(path) == 0:
        raise ValueError("empty reference path")
    progress = project(path, x0.x, x0.y, progress)
    window = reference_window(path, progress, w.N, p.Ts, speed_cap)
    theta0 = window[0, 2] + normalize_angle(x0.theta - window[0, 2])
    state = np.array([x0.x, x0.y, theta0, x0.v])
    models = [affine_matrices(window[k, 2], window[k, 3], 0.0, p.L, p.Ts) for k in range(w.N)]
    qp = build_qp(state, window, models, w, u_prev, p)
    warm = np.tile([u_prev.a, u_prev.delta], w.N)
    sol = solve_qp(qp, tol=tol, max_iter=max_iter, x0=warm)
    if sol.converged:
        a, d = sol.controls[0]
        u = p.clamp(ControlInput(float(a), float(d)))
    else:
        u = p.clamp(u_prev)
    return u, sol, progress
