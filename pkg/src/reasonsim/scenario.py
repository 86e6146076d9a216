"""The overtaking scenario: road, agents, goal and every tunable weight."""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import BicycleParams, CyclistState, Goal, RoadGeometry, VehicleState
from .mpc import MpcWeights
from .planner import PlannerConfig, PlannerWeights
from .reasons import ReasonParams, TriggerThresholds


@dataclass(frozen=True)
class GuardParams:
    """Speed cap applied while the cyclist is ahead in the ego's corridor."""

    d_stop: float = 6.0  # m
    k_gap: float = 0.8  # 1/s
    corridor: float = 1.5  # m, half-width of the lateral band counted as "in lane"

    def __post_init__(self):
        if not (self.d_stop >= 0 and self.k_gap > 0 and self.corridor > 0):
            raise ValueError("guard requires d_stop >= 0, k_gap > 0, corridor > 0")

    def speed_cap(self, ego: VehicleState, cyclist: CyclistState) -> float | None:
        d_long = cyclist.x - ego.x
        if d_long <= 0 or abs(cyclist.y - ego.y) >= self.corridor:
            return None
        return max(0.0, self.k_gap * (d_long - self.d_stop))


@dataclass(frozen=True, eq=False)
class Scenario:
    road: RoadGeometry = field(default_factory=RoadGeometry)
    ego_start: VehicleState = field(default_factory=lambda: VehicleState(0.0, -1.75, 0.0, 0.0))
    goal: Goal = field(default_factory=lambda: Goal(140.0, -1.75, 1.0))
    cyclist_start: CyclistState = field(default_factory=lambda: CyclistState(25.0, -1.75, 3.0))
    reason_params: ReasonParams = field(default_factory=ReasonParams)
    thresholds: TriggerThresholds = field(default_factory=TriggerThresholds)
    planner_weights: PlannerWeights = field(default_factory=PlannerWeights)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    mpc_weights: MpcWeights = field(default_factory=MpcWeights)
    bicycle: BicycleParams = field(default_factory=BicycleParams)
    guard: GuardParams = field(default_factory=GuardParams)
    sim_duration_max: float = 60.0
    substeps: int = 10

    def __post_init__(self):
        if not self.road.contains(self.goal.x, self.goal.y):
            raise ValueError("goal must lie inside the road")
        if not self.road.contains(self.ego_start.x, self.ego_start.y):
            raise ValueError("ego_start must lie inside the road")
        if not self.ego_start.x < self.cyclist_start.x:
            raise ValueError("ego_start must be behind cyclist_start in x")
        lo, hi = self.road.right_lane
        if not lo <= self.cyclist_start.y <= hi:
            raise ValueError("cyclist must start in the right lane")
        if not self.sim_duration_max > 0:
            raise ValueError("sim_duration_max must be > 0")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")

    @property
    def cyclist_speed(self) -> float:
        return self.cyclist_start.v

    @property
    def Ts(self) -> float:
        return self.bicycle.Ts
