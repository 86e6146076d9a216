"""Reason-supervised overtaking simulator.

A lattice planner and an LTV-MPC drive an automated vehicle behind a
cyclist while stakeholder reason scores decide when to replan.
"""

from .core import BicycleParams, ControlInput, CyclistState, Goal, RoadGeometry, VehicleState
from .kernels import BACKEND
from .reasons import ReasonParams, Stakeholder, TriggerThresholds
from .scenario import Scenario
from .sim import SimConfig, SimMode, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BicycleParams",
    "ControlInput",
    "CyclistState",
    "Goal",
    "ReasonParams",
    "RoadGeometry",
    "Scenario",
    "SimConfig",
    "SimMode",
    "Stakeholder",
    "TriggerThresholds",
    "VehicleState",
    "run",
]
