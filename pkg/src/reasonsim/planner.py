"""Lattice motion planner.

Constant-curvature motion primitives connect nodes of a (x, y, heading)
grid. A* minimizes a four-term path cost (length, curvature change,
obstacle clearance, traffic-rule violation). The search state also carries
the incoming primitive's curvature, since the smoothness term depends on
it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from . import kernels
from .core import BicycleParams, CyclistState, Goal, RoadGeometry, VehicleState


class NoPathError(RuntimeError):
    pass


@dataclass(frozen=True)
class PlannerWeights:
    w1: float = 1.0  # length
    w2: float = 5.0  # curvature change
    w3: float = 10.0  # obstacle clearance
    w4: float = 1000.0  # traffic rule
    replan_w4: float = 2.0

    def __post_init__(self):
        for name in ("w1", "w2", "w3", "w4", "replan_w4"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.replan_w4 < self.w4:
            raise ValueError("replan_w4 must be < w4")

    def nominal(self) -> "CostWeights":
        return CostWeights(self.w1, self.w2, self.w3, self.w4)

    def relaxed(self) -> "CostWeights":
        """Weights used after a reason trigger: the traffic-rule term is softened."""
        return CostWeights(self.w1, self.w2, self.w3, self.replan_w4)


class CostWeights(NamedTuple):
    w1: float
    w2: float
    w3: float
    w4: float


@dataclass(frozen=True)
class PlannerConfig:
    resolution: float = 0.5
    num_headings: int = 16
    arc_length: float = 2.0
    curvatures: tuple = (0.0, 0.05, -0.05, 0.1, -0.1, 0.15, -0.15)
    sample_spacing: float = 0.5
    field_resolution: float = 0.25
    d_safe: float = 3.0
    inflation: float = 1.5
    cyclist_length: float = 1.8
    cyclist_width: float = 0.6
    edge_margin: float = 1.0  # keeps the rear axle this far inside the road edge
    v_max: float = 8.0
    decel: float = 3.0  # m/s^2, end-of-path braking
    goal_tolerance: float = 0.25  # planner's own goal disc, tighter than the arrival test
    max_expansions: int = 3_000_000

    def __post_init__(self):
        for name in ("resolution", "arc_length", "sample_spacing", "field_resolution", "v_max", "decel"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("d_safe", "inflation", "edge_margin"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if self.num_headings < 4:
            raise ValueError("num_headings must be >= 4")


@dataclass(frozen=True)
class MotionPrimitive:
    curvature: float
    arc_length: float
    heading_index: int
    samples: np.ndarray  # (S, 3) exact arc poses relative to the start node, start excluded
    end_offset: tuple  # (dix, diy, dih) in lattice units
    snap_error: tuple  # (ex, ey, etheta) of the snapped end vs the exact arc end
    length: float  # max(arc length, snapped chord); keeps the heuristic consistent
    path_samples: np.ndarray  # arc poses with the snap error blended in linearly


@dataclass
class PrimitiveSet:
    resolution: float
    num_headings: int
    curvatures: tuple
    by_heading: list  # by_heading[ih] -> list[MotionPrimitive]
    _arrays: dict = field(default_factory=dict, repr=False)

    def arrays(self):
        if not self._arrays:
            nh = self.num_headings
            P = len(self.by_heading[0])
            S = self.by_heading[0][0].samples.shape[0]
            a = {
                "end_dix": np.zeros((nh, P), np.int32),
                "end_diy": np.zeros((nh, P), np.int32),
                "end_ih": np.zeros((nh, P), np.int32),
                "prim_k": np.zeros((nh, P), np.int32),
                "prim_len": np.zeros((nh, P)),
                "sdx": np.zeros((nh, P, S)),
                "sdy": np.zeros((nh, P, S)),
                "kappa": np.array(self.curvatures, dtype=np.float64),
            }
            for ih, prims in enumerate(self.by_heading):
                for p, prim in enumerate(prims):
                    dix, diy, dih = prim.end_offset
                    a["end_dix"][ih, p] = dix
                    a["end_diy"][ih, p] = diy
                    a["end_ih"][ih, p] = (ih + dih) % nh
                    a["prim_k"][ih, p] = self.curvatures.index(prim.curvature)
                    a["prim_len"][ih, p] = prim.length
                    a["sdx"][ih, p] = prim.path_samples[:, 0]
                    a["sdy"][ih, p] = prim.path_samples[:, 1]
            self._arrays.update(a)
        return self._arrays


def _arc(theta0: float, kappa: float, s: float):
    if kappa == 0.0:
        return s * math.cos(theta0), s * math.sin(theta0), theta0
    th = theta0 + kappa * s
    return (math.sin(th) - math.sin(theta0)) / kappa, -(math.cos(th) - math.cos(theta0)) / kappa, th


def generate_primitives(
    p: BicycleParams,
    arc_length: float,
    curvatures,
    resolution: float = 0.5,
    num_headings: int = 16,
    spacing: float = 0.5,
) -> PrimitiveSet:
    """One primitive per (curvature, start heading), end pose snapped to the lattice."""
    kmax = p.max_curvature()
    curvatures = tuple(float(k) for k in curvatures)
    for k in curvatures:
        if abs(k) > kmax:
            raise ValueError(f"infeasible curvature {k}: exceeds tan(delta_max)/L = {kmax:.4f}")
    if len(set(curvatures)) != len(curvatures):
        raise ValueError("curvatures must be distinct")
    n_samples = max(1, int(round(arc_length / spacing)))
    dtheta = 2.0 * math.pi / num_headings
    by_heading = []
    for ih in range(num_headings):
        theta0 = ih * dtheta
        prims = []
        for k in curvatures:
            samples = np.array(
                [_arc(theta0, k, arc_length * (q + 1) / n_samples) for q in range(n_samples)]
            )
            ex, ey, eth = samples[-1]
            dix, diy = int(round(ex / resolution)), int(round(ey / resolution))
            dih = int(round(k * arc_length / dtheta))
            snap = (dix * resolution - ex, diy * resolution - ey, dih * dtheta - k * arc_length)
            length = max(arc_length, math.sqrt((dix * resolution) ** 2 + (diy * resolution) ** 2))
            # Spread the snap error along the primitive so chained primitives
            # join without position or heading jumps.
            ramp = (np.arange(1, n_samples + 1) / n_samples)[:, None]
            blended = samples + ramp * np.asarray(snap)[None, :]
            blended[-1] = (dix * resolution, diy * resolution, theta0 + dih * dtheta)
            prims.append(
                MotionPrimitive(k, arc_length, ih, samples, (dix, diy, dih), snap, length, blended)
            )
        by_heading.append(prims)
    return PrimitiveSet(resolution, num_headings, curvatures, by_heading)


@dataclass(frozen=True)
class LatticeNode:
    ix: int
    iy: int
    ih: int


@dataclass(frozen=True)
class Lattice:
    ox: float
    oy: float
    resolution: float
    nx: int
    ny: int
    num_headings: int

    @classmethod
    def for_road(cls, road: RoadGeometry, cfg: PlannerConfig) -> "Lattice":
        # Rows are offset so both lane centres fall on nodes.
        res = cfg.resolution
        lane_center = road.centerline_y - road.lane_width / 2.0
        oy = lane_center - math.floor((lane_center - road.y_min) / res + 1e-9) * res
        ny = int(math.floor((road.y_max - oy) / res + 1e-9)) + 1
        nx = int(math.floor(road.road_length / res + 1e-9)) + 1
        return cls(0.0, oy, res, nx, ny, cfg.num_headings)

    def position(self, node: LatticeNode) -> tuple[float, float]:
        return self.ox + node.ix * self.resolution, self.oy + node.iy * self.resolution

    def heading(self, node: LatticeNode) -> float:
        return node.ih * 2.0 * math.pi / self.num_headings

    def snap(self, x: float, y: float, theta: float) -> LatticeNode:
        ix = min(max(int(round((x - self.ox) / self.resolution)), 0), self.nx - 1)
        iy = min(max(int(round((y - self.oy) / self.resolution)), 0), self.ny - 1)
        ih = int(round(theta / (2.0 * math.pi / self.num_headings))) % self.num_headings
        return LatticeNode(ix, iy, ih)


@dataclass
class OccupancyField:
    x0: float
    y0: float
    resolution: float
    obstacle: np.ndarray  # bool (ny, nx)
    distance: np.ndarray  # m to nearest obstacle cell, 0 inside, inf without obstacles
    prohibited: np.ndarray  # bool
    blocked: np.ndarray  # bool, obstacle or outside the drivable band
    penalty: np.ndarray  # max(0, d_safe - distance)^2

    @classmethod
    def from_masks(cls, x0, y0, resolution, obstacle, prohibited, drivable, d_safe) -> "OccupancyField":
        obstacle = np.asarray(obstacle, bool)
        if obstacle.any():
            distance = ndimage.distance_transform_edt(~obstacle) * resolution
        else:
            distance = np.full(obstacle.shape, np.inf)
        penalty = np.maximum(0.0, d_safe - distance) ** 2
        blocked = obstacle | ~np.asarray(drivable, bool)
        return cls(
            float(x0), float(y0), float(resolution), obstacle, distance,
            np.asarray(prohibited, bool), blocked, penalty,
        )

    def cell(self, x: float, y: float):
        cx = math.floor((x - self.x0) / self.resolution)
        cy = math.floor((y - self.y0) / self.resolution)
        ny, nx = self.obstacle.shape
        if 0 <= cx < nx and 0 <= cy < ny:
            return cy, cx
        return None

    def cell_centers(self):
        ny, nx = self.obstacle.shape
        xs = self.x0 + (np.arange(nx) + 0.5) * self.resolution
        ys = self.y0 + (np.arange(ny) + 0.5) * self.resolution
        return xs, ys


def build_field(
    road: RoadGeometry, cyclists, cfg: PlannerConfig
) -> OccupancyField:
    """Occupancy over the road with each cyclist's footprint inflated."""
    res = cfg.field_resolution
    nx = int(math.ceil(road.road_length / res))
    ny = int(math.ceil((road.y_max - road.y_min) / res))
    xs = (np.arange(nx) + 0.5) * res
    ys = road.y_min + (np.arange(ny) + 0.5) * res
    X, Y = np.meshgrid(xs, ys)
    obstacle = np.zeros((ny, nx), bool)
    for c in cyclists:
        ex = np.maximum(np.abs(X - c.x) - cfg.cyclist_length / 2.0, 0.0)
        ey = np.maximum(np.abs(Y - c.y) - cfg.cyclist_width / 2.0, 0.0)
        obstacle |= np.sqrt(ex * ex + ey * ey) <= cfg.inflation
    prohibited = Y > road.centerline_y
    drivable = (Y >= road.y_min + cfg.edge_margin) & (Y <= road.y_max - cfg.edge_margin)
    return OccupancyField.from_masks(0.0, road.y_min, res, obstacle, prohibited, drivable, cfg.d_safe)


def edge_cost(
    primitive: MotionPrimitive,
    placement: tuple[float, float],
    fld: OccupancyField,
    w: CostWeights,
    prev_curvature: float,
) -> float:
    """Cost of one primitive placed with its start at ``placement``; inf if infeasible."""
    px, py = placement
    pen_sum = 0.0
    proh_cnt = 0
    for dx, dy in zip(primitive.path_samples[:, 0].tolist(), primitive.path_samples[:, 1].tolist()):
        cell = fld.cell(px + dx, py + dy)
        if cell is None or fld.blocked[cell]:
            return math.inf
        pen_sum += float(fld.penalty[cell])
        proh_cnt += int(fld.prohibited[cell])
    return (
        w.w1 * primitive.length
        + w.w2 * abs(primitive.curvature - prev_curvature)
        + w.w3 * pen_sum
        + w.w4 * proh_cnt
    )


@dataclass
class ReferencePath:
    id: int
    samples: np.ndarray  # (M, 4): x, y, theta (continuous), v_ref
    s: np.ndarray  # cumulative arc length at each sample
    cost: float
    nodes: list

    @property
    def total_length(self) -> float:
        return float(self.s[-1])

    def __len__(self):
        return self.samples.shape[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "y", "theta", "v_ref"])
            for row in self.samples:
                wr.writerow([repr(float(v)) for v in row])


def speed_profile(s: np.ndarray, v_max: float, decel: float) -> np.ndarray:
    """Cruise at v_max, then brake at ``decel`` to stop at the last sample."""
    remaining = np.maximum(s[-1] - s, 0.0)
    return np.minimum(v_max, np.sqrt(2.0 * decel * remaining))


class Planner:
    """Binds the lattice, primitives and configuration for one road."""

    def __init__(self, road: RoadGeometry, bicycle: BicycleParams, cfg: PlannerConfig | None = None):
        self.road = road
        self.cfg = cfg or PlannerConfig()
        self.lattice = Lattice.for_road(road, self.cfg)
        self.primitives = generate_primitives(
            bicycle, self.cfg.arc_length, self.cfg.curvatures,
            self.cfg.resolution, self.cfg.num_headings, self.cfg.sample_spacing,
        )

    def field(self, cyclists=()) -> OccupancyField:
        return build_field(self.road, cyclists, self.cfg)

    def plan(
        self,
        start: VehicleState,
        goal: Goal,
        fld: OccupancyField,
        w: CostWeights,
        path_id: int = 0,
        start_curvature: float = 0.0,
    ) -> ReferencePath:
        return plan(start, goal, fld, self.primitives, w, self.lattice, self.cfg, path_id, start_curvature)


def search(
    start: LatticeNode,
    start_k: int,
    goal: Goal,
    fld: OccupancyField,
    primitives: PrimitiveSet,
    w: CostWeights,
    lattice: Lattice,
    max_expansions: int = 3_000_000,
    backend=None,
):
    """Run the lattice A*; returns ``(cost, [(node, k_index)], [primitive index])``."""
    fn = backend or kernels.lattice_astar
    a = primitives.arrays()
    nk = len(primitives.curvatures)
    blocked = fld.blocked
    w4 = float(w.w4)
    if math.isinf(w4):
        # an infinite rule weight makes prohibited cells impassable
        blocked = blocked | fld.prohibited
        w4 = 0.0
    cost, states, prims, _ = fn(
        lattice.nx, lattice.ny, lattice.num_headings, nk,
        lattice.ox, lattice.oy, lattice.resolution,
        a["end_dix"], a["end_diy"], a["end_ih"], a["prim_k"], a["prim_len"],
        a["sdx"], a["sdy"], a["kappa"],
        fld.x0, fld.y0, fld.resolution,
        np.ascontiguousarray(fld.penalty, dtype=np.float64),
        np.ascontiguousarray(fld.prohibited, dtype=np.uint8),
        np.ascontiguousarray(blocked, dtype=np.uint8),
        float(w.w1), float(w.w2), float(w.w3), w4,
        start.ix, start.iy, start.ih, start_k,
        float(goal.x), float(goal.y), float(goal.tolerance), int(max_expansions),
    )
    if not math.isfinite(cost):
        raise NoPathError("goal unreachable under current weights")
    nodes = []
    for st in states.tolist():
        ik = st % nk
        rest = st // nk
        ix = rest % lattice.nx
        rest //= lattice.nx
        iy = rest % lattice.ny
        ih = rest // lattice.ny
        nodes.append((LatticeNode(ix, iy, ih), ik))
    return float(cost), nodes, prims.tolist()


def plan(
    start: VehicleState,
    goal: Goal,
    fld: OccupancyField,
    primitives: PrimitiveSet,
    w: CostWeights,
    lattice: Lattice,
    cfg: PlannerConfig | None = None,
    path_id: int = 0,
    start_curvature: float = 0.0,
) -> ReferencePath:
    cfg = cfg or PlannerConfig()
    node = lattice.snap(start.x, start.y, start.theta)
    kappa = np.asarray(primitives.curvatures)
    start_k = int(np.argmin(np.abs(kappa - start_curvature)))
    target = Goal(goal.x, goal.y, min(goal.tolerance, cfg.goal_tolerance))
    cost, nodes, prims = search(node, start_k, target, fld, primitives, w, lattice, cfg.max_expansions)

    x0, y0 = lattice.position(nodes[0][0])
    th = lattice.heading(nodes[0][0])
    # Keep the start heading on the same branch as the vehicle's.
    th += 2.0 * math.pi * round((start.theta - th) / (2.0 * math.pi))
    rows = [(x0, y0, th)]
    for (nd, _), p in zip(nodes[:-1], prims):
        prim = primitives.by_heading[nd.ih][p]
        px, py = lattice.position(nd)
        base = lattice.heading(nd)
        # continuous heading: start from the previous sample's branch
        offset = rows[-1][2] - base
        offset = 2.0 * math.pi * round(offset / (2.0 * math.pi))
        for dx, dy, sth in prim.path_samples:
            rows.append((px + dx, py + dy, sth + offset))
    xy = np.array(rows)
    seg = np.hypot(np.diff(xy[:, 0]), np.diff(xy[:, 1]))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    v = speed_profile(s, cfg.v_max, cfg.decel)
    samples = np.column_stack([xy, v])
    return ReferencePath(path_id, samples, s, cost, [n for n, _ in nodes])
