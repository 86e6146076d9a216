import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reasonsim.core import (
    BicycleParams,
    ControlInput,
    CyclistState,
    Goal,
    Lane,
    OffRoadError,
    RoadGeometry,
    VehicleState,
    ego_cyclist_distance,
    lane_of,
    normalize_angle,
    signed_lateral_displacement,
)

ROAD = RoadGeometry()
coord = st.floats(-100, 100, allow_nan=False)


def test_lane_classification():
    c = ROAD.centerline_y
    assert lane_of(c - 1.5, ROAD) is Lane.RIGHT
    assert lane_of(c, ROAD) is Lane.CENTERLINE
    assert lane_of(c + 0.2, ROAD) is Lane.LEFT


def test_lane_of_off_road():
    with pytest.raises(OffRoadError, match="off-road"):
        lane_of(ROAD.y_max + 0.01, ROAD)


@pytest.mark.parametrize("y, expected", [(-2.0, 2.0), (0.0, 0.0), (1.0, -1.0)])
def test_signed_lateral_displacement(y, expected):
    assert signed_lateral_displacement(VehicleState(0, y, 0, 0), ROAD) == expected


@given(st.floats(-3.5, 3.5, allow_nan=False))
def test_lane_and_displacement_agree(y):
    d = signed_lateral_displacement(VehicleState(0, y, 0, 0), ROAD)
    lane = lane_of(y, ROAD)
    assert (d > 0) == (lane is Lane.RIGHT)
    assert (d < 0) == (lane is Lane.LEFT)


def test_distance_examples():
    assert ego_cyclist_distance(VehicleState(0, 0, 0, 0), CyclistState(3, 4, 0)) == 5.0
    assert ego_cyclist_distance(VehicleState(1, 1, 0, 0), CyclistState(1, 1, 0)) == 0.0
    assert ego_cyclist_distance(VehicleState(10, 0, 0, 0), CyclistState(18, 0, 0)) == 8.0


@settings(max_examples=300)
@given(coord, coord, coord, coord, coord, coord)
def test_distance_symmetric_and_triangle(ax, ay, bx, by, cx, cy):
    def d(p, q):
        return ego_cyclist_distance(VehicleState(p[0], p[1], 0, 0), CyclistState(q[0], q[1], 0))

    a, b, c = (ax, ay), (bx, by), (cx, cy)
    assert d(a, b) == d(b, a)
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-9


@given(st.floats(-50, 50, allow_nan=False))
def test_normalize_angle_range(a):
    w = normalize_angle(a)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


def test_vehicle_state_invariants():
    with pytest.raises(ValueError):
        VehicleState(0, 0, 0, -1)
    assert VehicleState(0, 0, 3 * math.pi, 0).theta == pytest.approx(math.pi)


def test_bicycle_params_validation_and_clamp():
    p = BicycleParams()
    assert p.clamp(ControlInput(10, -1)) == ControlInput(p.a_max, -p.delta_max)
    assert p.max_curvature() == pytest.approx(math.tan(0.5) / 2.7)
    with pytest.raises(ValueError):
        BicycleParams(a_min=1.0)
    with pytest.raises(ValueError):
        BicycleParams(L=-1)


def test_goal_reached():
    g = Goal(10, 0, 1.0)
    assert g.reached(VehicleState(9.2, 0.5, 0, 0))
    assert not g.reached(VehicleState(8.9, 0, 0, 0))


def test_cyclist_rejects_negative_speed():
    with pytest.raises(ValueError):
        CyclistState(0, 0, -0.1)
