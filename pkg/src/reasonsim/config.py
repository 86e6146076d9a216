"""INI scenario files.

Every key is optional; omitted keys take the scenario defaults. Unknown
sections or keys are rejected so that typos cannot silently fall back to
a default.
"""

from __future__ import annotations

import configparser
import os

import numpy as np

from .core import BicycleParams, CyclistState, Goal, RoadGeometry, VehicleState
from .mpc import MpcWeights
from .planner import PlannerConfig, PlannerWeights
from .reasons import ReasonParams, TriggerThresholds
from .scenario import GuardParams, Scenario
from .sim import SimConfig, SimMode


class ConfigError(ValueError):
    pass


_FLOAT, _INT, _LIST = float, int, "list"

SCHEMA = {
    "road": {"lane_width": _FLOAT, "centerline_y": _FLOAT, "road_length": _FLOAT},
    "ego": {
        "x": _FLOAT, "y": _FLOAT, "theta": _FLOAT, "v": _FLOAT, "v_max": _FLOAT,
        "wheelbase": _FLOAT, "l_r": _FLOAT, "a_min": _FLOAT, "a_max": _FLOAT, "delta_max": _FLOAT,
    },
    "cyclist": {"x": _FLOAT, "y": _FLOAT, "speed": _FLOAT},
    "reasons": {k: _FLOAT for k in ("k1", "k2", "k3", "k4", "d_th_vru", "t_th_vru", "d_th_driver", "t_th_driver")},
    "thresholds": {k: _FLOAT for k in ("tau", "tau_policymaker", "tau_vru", "tau_driver", "cooldown")},
    "planner": {
        "w1": _FLOAT, "w2": _FLOAT, "w3": _FLOAT, "w4": _FLOAT, "replan_w4": _FLOAT,
        "resolution": _FLOAT, "num_headings": _INT, "arc_length": _FLOAT, "curvatures": _LIST,
        "sample_spacing": _FLOAT, "field_resolution": _FLOAT, "d_safe": _FLOAT, "inflation": _FLOAT,
        "edge_margin": _FLOAT, "decel": _FLOAT, "goal_tolerance": _FLOAT, "max_expansions": _INT,
    },
    "mpc": {
        "q_perp": _FLOAT, "q_par": _FLOAT, "q_theta": _FLOAT, "q_v": _FLOAT,
        "r_a": _FLOAT, "r_delta": _FLOAT, "rd_a": _FLOAT, "rd_delta": _FLOAT,
        "terminal_scale": _FLOAT, "horizon": _INT, "d_stop": _FLOAT, "k_gap": _FLOAT, "corridor": _FLOAT,
    },
    "sim": {
        "ts": _FLOAT, "duration_max": _FLOAT, "substeps": _INT, "goal_x": _FLOAT, "goal_y": _FLOAT,
        "goal_tolerance": _FLOAT, "seed": _INT, "log_every": _INT, "mode": str,
    },
}


def _convert(section, key, raw):
    kind = SCHEMA[section][key]
    try:
        if kind == _LIST:
            return tuple(float(v) for v in raw.split(",") if v.strip())
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None


def load_values(text: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        values[section] = {}
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[section][key] = _convert(section, key, raw)
    return values


def build_config(values: dict) -> SimConfig:
    def sec(name):
        return values.get(name, {})

    try:
        road_v, ego_v, cyc_v = sec("road"), sec("ego"), sec("cyclist")
        rsn, thr, pln, mpc, sim = sec("reasons"), sec("thresholds"), sec("planner"), sec("mpc"), sec("sim")
        road = RoadGeometry(**road_v)
        bicycle_kw = {k: ego_v[k] for k in ("l_r", "a_min", "a_max", "delta_max") if k in ego_v}
        if "wheelbase" in ego_v:
            bicycle_kw["L"] = ego_v["wheelbase"]
        if "ts" in sim:
            bicycle_kw["Ts"] = sim["ts"]
        bicycle = BicycleParams(**bicycle_kw)

        ego_default = Scenario.__dataclass_fields__["ego_start"].default_factory()
        ego = VehicleState(
            ego_v.get("x", ego_default.x), ego_v.get("y", ego_default.y),
            ego_v.get("theta", ego_default.theta), ego_v.get("v", ego_default.v),
        )
        c_default = Scenario.__dataclass_fields__["cyclist_start"].default_factory()
        cyclist = CyclistState(
            cyc_v.get("x", c_default.x), cyc_v.get("y", c_default.y), cyc_v.get("speed", c_default.v)
        )
        g_default = Scenario.__dataclass_fields__["goal"].default_factory()
        goal = Goal(
            sim.get("goal_x", g_default.x), sim.get("goal_y", g_default.y),
            sim.get("goal_tolerance", g_default.tolerance),
        )

        reason_params = ReasonParams(**rsn)
        thr = dict(thr)
        tau = thr.pop("tau", None)
        if tau is not None:
            for k in ("tau_policymaker", "tau_vru", "tau_driver"):
                thr.setdefault(k, tau)
        thresholds = TriggerThresholds(**thr)

        pw_keys = ("w1", "w2", "w3", "w4", "replan_w4")
        planner_weights = PlannerWeights(**{k: pln[k] for k in pw_keys if k in pln})
        pc = {k: v for k, v in pln.items() if k not in pw_keys}
        if "v_max" in ego_v:
            pc["v_max"] = ego_v["v_max"]
        planner_cfg = PlannerConfig(**pc)

        dm = MpcWeights()
        q_par = mpc.get("q_par", dm.Q_par)
        q_perp = mpc.get("q_perp", dm.Q_perp)
        q_th = mpc.get("q_theta", float(dm.Q_thetav[0, 0]))
        q_v = mpc.get("q_v", float(dm.Q_thetav[1, 1]))
        scale = mpc.get("terminal_scale", 2.0)
        if not scale >= 0:
            raise ValueError("terminal_scale must be >= 0")
        mpc_weights = MpcWeights(
            Q_perp=q_perp, Q_par=q_par, Q_thetav=np.diag([q_th, q_v]),
            R=np.diag([mpc.get("r_a", float(dm.R[0, 0])), mpc.get("r_delta", float(dm.R[1, 1]))]),
            R_d=np.diag([mpc.get("rd_a", float(dm.R_d[0, 0])), mpc.get("rd_delta", float(dm.R_d[1, 1]))]),
            Q_f=scale * np.diag([q_par, q_perp, q_th, q_v]),
            N=mpc.get("horizon", dm.N),
        )
        guard = GuardParams(**{k: mpc[k] for k in ("d_stop", "k_gap", "corridor") if k in mpc})

        scenario = Scenario(
            road=road, ego_start=ego, goal=goal, cyclist_start=cyclist,
            reason_params=reason_params, thresholds=thresholds,
            planner_weights=planner_weights, planner=planner_cfg,
            mpc_weights=mpc_weights, bicycle=bicycle, guard=guard,
            sim_duration_max=sim.get("duration_max", 60.0), substeps=sim.get("substeps", 10),
        )
        mode = SimMode(sim.get("mode", SimMode.BASELINE.value))
        return SimConfig(scenario, mode, seed=sim.get("seed", 0), log_every=sim.get("log_every", 1))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_scenario_text(text: str) -> SimConfig:
    return build_config(load_values(text))


def parse_scenario(path: str | os.PathLike) -> SimConfig:
    """Read an INI scenario file. Raises OSError when unreadable, ConfigError when invalid."""
    with open(path, encoding="utf-8") as fh:
        return parse_scenario_text(fh.read())
