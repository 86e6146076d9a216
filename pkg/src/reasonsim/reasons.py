"""Stakeholder reason scores and the replanning trigger.

Each score lies in (0, 1]: exactly 1 while the stakeholder's threshold is
respected and decaying exponentially once it is crossed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .core import (
    CyclistState,
    RoadGeometry,
    VehicleState,
    ego_cyclist_distance,
    signed_lateral_displacement,
)


class Stakeholder(enum.Enum):
    POLICYMAKER = "policymaker"
    VRU = "vru"
    DRIVER = "driver"


@dataclass(frozen=True)
class ReasonParams:
    k1: float = 0.2  # 1/m, lane-violation decay
    k2: float = 0.2  # 1/m, proximity decay
    k3: float = 0.2  # 1/s, cyclist discomfort decay
    k4: float = 0.2  # 1/s, driver impatience decay
    d_th_vru: float = 8.0
    t_th_vru: float = 5.0
    d_th_driver: float = 12.0
    t_th_driver: float = 10.0

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "k4", "d_th_vru", "t_th_vru", "d_th_driver", "t_th_driver"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.d_th_driver > self.d_th_vru:
            raise ValueError("d_th_driver must be > d_th_vru")


@dataclass(frozen=True)
class TriggerThresholds:
    tau_policymaker: float = 0.7
    tau_vru: float = 0.7
    tau_driver: float = 0.7
    cooldown: float = 1.0  # s between replans

    def __post_init__(self):
        for name in ("tau_policymaker", "tau_vru", "tau_driver"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in (0, 1)")
        if not self.cooldown >= 0:
            raise ValueError("cooldown must be >= 0")

    def tau(self, who: Stakeholder) -> float:
        return {
            Stakeholder.POLICYMAKER: self.tau_policymaker,
            Stakeholder.VRU: self.tau_vru,
            Stakeholder.DRIVER: self.tau_driver,
        }[who]


@dataclass(frozen=True)
class ReasonAccumulators:
    t_close_vru: float = 0.0
    t_behind_driver: float = 0.0


@dataclass(frozen=True)
class ReasonReport:
    r_policymaker: float
    r_vru_safety: float
    r_vru_comfort: float
    r_vru: float
    r_driver: float
    accumulators: ReasonAccumulators
    min_score: float
    violating_stakeholder: Optional[Stakeholder]
    distance: float

    def score(self, who: Stakeholder) -> float:
        return {
            Stakeholder.POLICYMAKER: self.r_policymaker,
            Stakeholder.VRU: self.r_vru,
            Stakeholder.DRIVER: self.r_driver,
        }[who]


def policymaker_score(d_veh: float, k1: float) -> float:
    if d_veh > 0:
        return 1.0
    return math.exp(k1 * d_veh)


def vru_safety_score(d: float, d_th: float, k2: float) -> float:
    # Decays as the gap shrinks below d_th; equals 1 at the threshold.
    if d > d_th:
        return 1.0
    return math.exp(k2 * (d - d_th))


def vru_comfort_score(t_close: float, d: float, params: ReasonParams) -> float:
    if t_close < params.t_th_vru or d > params.d_th_vru:
        return 1.0
    return math.exp(-params.k3 * (t_close - params.t_th_vru))


def vru_score(safety: float, comfort: float) -> float:
    return safety * comfort


def driver_score(t_behind: float, d: float, params: ReasonParams) -> float:
    if t_behind < params.t_th_driver or d > params.d_th_driver:
        return 1.0
    return math.exp(-params.k4 * (t_behind - params.t_th_driver))


def update_accumulators(
    acc: ReasonAccumulators,
    ego: VehicleState,
    cyclist: CyclistState,
    d_th_vru: float,
    d_th_driver: float,
    dt: float,
) -> ReasonAccumulators:
    """Add ``dt`` to each timer whose closeness condition holds.

    Impatience only accrues while the ego is still behind the cyclist.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    d = ego_cyclist_distance(ego, cyclist)
    t_close = acc.t_close_vru + dt if d < d_th_vru else acc.t_close_vru
    behind = ego.x < cyclist.x
    t_behind = acc.t_behind_driver + dt if (d < d_th_driver and behind) else acc.t_behind_driver
    return ReasonAccumulators(t_close, t_behind)


def _lowest_violator(scores, thresholds: TriggerThresholds) -> Optional[Stakeholder]:
    worst = None
    for who, value in scores:
        if value < thresholds.tau(who) and (worst is None or value < worst[1]):
            worst = (who, value)
    return worst[0] if worst else None


def evaluate(
    ego: VehicleState,
    cyclist: CyclistState,
    road: RoadGeometry,
    acc: ReasonAccumulators,
    params: ReasonParams,
    thresholds: TriggerThresholds | None = None,
) -> ReasonReport:
    thresholds = thresholds or TriggerThresholds()
    d = ego_cyclist_distance(ego, cyclist)
    r_policy = policymaker_score(signed_lateral_displacement(ego, road), params.k1)
    r_safety = vru_safety_score(d, params.d_th_vru, params.k2)
    r_comfort = vru_comfort_score(acc.t_close_vru, d, params)
    r_vru = vru_score(r_safety, r_comfort)
    r_driver = driver_score(acc.t_behind_driver, d, params)
    scores = [
        (Stakeholder.POLICYMAKER, r_policy),
        (Stakeholder.VRU, r_vru),
        (Stakeholder.DRIVER, r_driver),
    ]
    return ReasonReport(
        r_policymaker=r_policy,
        r_vru_safety=r_safety,
        r_vru_comfort=r_comfort,
        r_vru=r_vru,
        r_driver=r_driver,
        accumulators=acc,
        min_score=min(r_policy, r_vru, r_driver),
        violating_stakeholder=_lowest_violator(scores, thresholds),
        distance=d,
    )


def check_trigger(
    report: ReasonReport,
    thresholds: TriggerThresholds,
    time_since_last_replan: float,
) -> Optional[Stakeholder]:
    """Return the stakeholder that demands a replan, or None.

    Fires when any score sits below its threshold and the cooldown has
    elapsed; names the lowest-scoring violator.
    """
    if time_since_last_replan < thresholds.cooldown:
        return None
    scores = [(who, report.score(who)) for who in Stakeholder]
    return _lowest_violator(scores, thresholds)
