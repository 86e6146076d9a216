"""Shared value types and road geometry.

Distances to the cyclist are measured from the ego rear-axle centre, the
same point the kinematic bicycle state describes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

COLLISION_DISTANCE = 0.5  # m, ego-cyclist distance counted as contact


class OffRoadError(ValueError):
    pass


def normalize_angle(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    a = math.remainder(angle, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


@dataclass(frozen=True)
class VehicleState:
    x: float  # m
    y: float  # m
    theta: float  # rad, CCW from +x
    v: float  # m/s

    def __post_init__(self):
        if self.v < 0.0:
            raise ValueError(f"speed must be >= 0, got {self.v}")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def as_array(self):
        return (self.x, self.y, self.theta, self.v)


@dataclass(frozen=True)
class ControlInput:
    a: float = 0.0  # m/s^2
    delta: float = 0.0  # rad, front wheel


@dataclass(frozen=True)
class BicycleParams:
    L: float = 2.7
    l_r: float = 1.35
    a_min: float = -4.0
    a_max: float = 2.5
    delta_max: float = 0.5
    Ts: float = 0.1

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be > 0")
        if not 0 < self.l_r < self.L:
            raise ValueError("l_r must satisfy 0 < l_r < L")
        if not self.a_min < 0 < self.a_max:
            raise ValueError("acceleration bounds must satisfy a_min < 0 < a_max")
        if not 0 < self.delta_max < math.pi / 2:
            raise ValueError("delta_max must be in (0, pi/2)")
        if not self.Ts > 0:
            raise ValueError("Ts must be > 0")

    @property
    def delta_min(self) -> float:
        return -self.delta_max

    def clamp(self, u: ControlInput) -> ControlInput:
        a = min(max(u.a, self.a_min), self.a_max)
        d = min(max(u.delta, self.delta_min), self.delta_max)
        return ControlInput(a, d)

    def max_curvature(self) -> float:
        return math.tan(self.delta_max) / self.L


class Lane(enum.Enum):
    RIGHT = "right"
    LEFT = "left"
    CENTERLINE = "centerline"


@dataclass(frozen=True)
class RoadGeometry:
    """Straight two-lane road along +x; the ego's legal lane is below the centerline."""

    lane_width: float = 3.5
    centerline_y: float = 0.0
    road_length: float = 150.0

    def __post_init__(self):
        if not self.lane_width > 0:
            raise ValueError("lane_width must be > 0")
        if not self.road_length > 0:
            raise ValueError("road_length must be > 0")

    @property
    def right_lane(self) -> tuple[float, float]:
        return (self.centerline_y - self.lane_width, self.centerline_y)

    @property
    def left_lane(self) -> tuple[float, float]:
        return (self.centerline_y, self.centerline_y + self.lane_width)

    @property
    def y_min(self) -> float:
        return self.centerline_y - self.lane_width

    @property
    def y_max(self) -> float:
        return self.centerline_y + self.lane_width

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.road_length and self.y_min <= y <= self.y_max


def lane_of(y: float, road: RoadGeometry) -> Lane:
    if not road.y_min <= y <= road.y_max:
        raise OffRoadError(f"off-road: y={y} outside [{road.y_min}, {road.y_max}]")
    if y < road.centerline_y:
        return Lane.RIGHT
    if y > road.centerline_y:
        return Lane.LEFT
    return Lane.CENTERLINE


def signed_lateral_displacement(state: VehicleState, road: RoadGeometry) -> float:
    """Distance to the centerline, positive on the legal (right) side."""
    lane_of(state.y, road)
    return road.centerline_y - state.y


@dataclass(frozen=True)
class CyclistState:
    x: float
    y: float
    v: float

    def __post_init__(self):
        if self.v < 0.0:
            raise ValueError(f"cyclist speed must be >= 0, got {self.v}")


def ego_cyclist_distance(ego: VehicleState, cyclist: CyclistState) -> float:
    return math.hypot(cyclist.x - ego.x, cyclist.y - ego.y)


@dataclass(frozen=True)
class Goal:
    x: float
    y: float
    tolerance: float = 1.0

    def reached(self, state: VehicleState) -> bool:
        return math.hypot(state.x - self.x, state.y - self.y) <= self.tolerance
