"""Closed-loop simulation: plan, score, maybe replan, control, integrate."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core import COLLISION_DISTANCE, ControlInput, CyclistState, ego_cyclist_distance
from .dynamics import integrate
from .mpc import mpc_step
from .planner import NoPathError, Planner
from .reasons import ReasonAccumulators, check_trigger, evaluate, update_accumulators
from .scenario import Scenario
from .simlog import SimLog, SimRecord


class SimMode(enum.Enum):
    BASELINE = "baseline"
    REPLANNER = "replanner"


class ScenarioInfeasibleError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario
    mode: SimMode = SimMode.BASELINE
    seed: int = 0  # reserved; runs are deterministic
    log_every: int = 1

    def __post_init__(self):
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")


def cyclist_step(c: CyclistState, dt: float) -> CyclistState:
    if not dt > 0:
        raise ValueError("dt must be > 0")
    return CyclistState(c.x + c.v * dt, c.y, c.v)


def run(config: SimConfig, progress_cb=None) -> SimLog:
    """Simulate one scenario and return its log.

    Baseline mode evaluates and logs triggers but never replans. In
    replanner mode a trigger rebuilds the occupancy field around the
    cyclist's current position and plans again with the relaxed
    traffic-rule weight.
    """
    sc = config.scenario
    p = sc.bicycle
    Ts = p.Ts
    planner = Planner(sc.road, p, sc.planner)
    replanning = config.mode is SimMode.REPLANNER

    ego = sc.ego_start
    cyclist = sc.cyclist_start
    try:
        # The cyclist moves, so the initial route ignores it; following is
        # left to the speed cap and overtaking to the supervisor.
        path = planner.plan(ego, sc.goal, planner.field(()), sc.planner_weights.nominal(), path_id=0)
    except NoPathError as exc:
        raise ScenarioInfeasibleError("scenario infeasible") from exc

    log = SimLog(config.mode.value, Ts, paths=[path])
    acc = ReasonAccumulators()
    u_prev = ControlInput()
    progress = 0.0
    last_trigger_step = None
    max_steps = int(round(sc.sim_duration_max / Ts))
    cooldown_steps = sc.thresholds.cooldown / Ts

    k = 0
    while True:
        t = k * Ts
        acc = update_accumulators(
            acc, ego, cyclist, sc.reason_params.d_th_vru, sc.reason_params.d_th_driver, Ts
        )
        report = evaluate(ego, cyclist, sc.road, acc, sc.reason_params, sc.thresholds)
        arrived = sc.goal.reached(ego)
        collided = ego_cyclist_distance(ego, cyclist) < COLLISION_DISTANCE
        final = arrived or collided or k >= max_steps

        since = math.inf if last_trigger_step is None else (k - last_trigger_step) * Ts
        # compare in steps so the cooldown is immune to float accumulation
        if last_trigger_step is not None and k - last_trigger_step >= cooldown_steps - 1e-9:
            since = math.inf
        who = None if final else check_trigger(report, sc.thresholds, since)
        replanned = False
        if who is not None:
            last_trigger_step = k
            if replanning:
                try:
                    curv = math.tan(u_prev.delta) / p.L
                    path = planner.plan(
                        ego, sc.goal, planner.field([cyclist]), sc.planner_weights.relaxed(),
                        path_id=path.id + 1, start_curvature=curv,
                    )
                    log.paths.append(path)
                    progress = 0.0
                    replanned = True
                except NoPathError:
                    pass

        if final:
            u, iters, res, ok = u_prev, 0, 0.0, True
        else:
            cap = sc.guard.speed_cap(ego, cyclist)
            u, sol, progress = mpc_step(ego, path, progress, sc.mpc_weights, p, u_prev, cap)
            iters, res, ok = sol.iterations, sol.kkt_residual, sol.converged

        if final or k % config.log_every == 0:
            log.append(SimRecord(t, ego, u, cyclist, report, who, replanned, path.id, iters, res, ok))
        if progress_cb is not None:
            progress_cb(k, t)
        if final:
            log.arrival_time = t if arrived else None
            log.collision = collided
            return log

        ego = integrate(ego, u, p, Ts, sc.substeps)
        cyclist = cyclist_step(cyclist, Ts)
        u_prev = u
        k += 1
