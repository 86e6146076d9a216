"""Per-step simulation records, run summary and the CSV log format."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

from .core import ControlInput, CyclistState, VehicleState
from .reasons import ReasonReport, Stakeholder

CSV_HEADER = (
    "t,x,y,theta,v,a,delta,cyclist_x,cyclist_y,d_veh_vru,r_policy,r_vru_safety,"
    "r_vru_comfort,r_vru,r_driver,t_close_vru,t_behind_driver,trigger,path_id,qp_iters,qp_residual"
)
COLUMNS = tuple(CSV_HEADER.split(","))


@dataclass(frozen=True)
class SimRecord:
    t: float
    ego: VehicleState
    control: ControlInput
    cyclist: CyclistState
    report: ReasonReport
    trigger: Optional[Stakeholder]
    replan_event: bool
    active_path_id: int
    qp_iters: int
    qp_residual: float
    qp_converged: bool = True

    def row(self) -> list[str]:
        r = self.report
        f = lambda v: repr(float(v))  # noqa: E731, shortest round-trip form
        return [
            f(self.t), f(self.ego.x), f(self.ego.y), f(self.ego.theta), f(self.ego.v),
            f(self.control.a), f(self.control.delta),
            f(self.cyclist.x), f(self.cyclist.y), f(r.distance),
            f(r.r_policymaker), f(r.r_vru_safety), f(r.r_vru_comfort), f(r.r_vru), f(r.r_driver),
            f(r.accumulators.t_close_vru), f(r.accumulators.t_behind_driver),
            self.trigger.value if self.trigger else "none",
            str(self.active_path_id), str(self.qp_iters), f(self.qp_residual),
        ]


@dataclass(frozen=True)
class SimSummary:
    mode: str
    arrival_time: Optional[float]
    min_ego_cyclist_distance: float
    num_replans: int
    collision: bool
    min_r_policy: float
    min_r_vru: float
    min_r_driver: float
    steps: int

    def items(self):
        arr = "none" if self.arrival_time is None else repr(self.arrival_time)
        return [
            ("mode", self.mode),
            ("arrival_time", arr),
            ("num_replans", str(self.num_replans)),
            ("min_distance", repr(self.min_ego_cyclist_distance)),
            ("collision", str(self.collision).lower()),
            ("min_r_policy", repr(self.min_r_policy)),
            ("min_r_vru", repr(self.min_r_vru)),
            ("min_r_driver", repr(self.min_r_driver)),
            ("steps", str(self.steps)),
        ]

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items())


@dataclass
class SimLog:
    mode: str
    Ts: float
    records: list = field(default_factory=list)
    arrival_time: Optional[float] = None
    collision: bool = False
    paths: list = field(default_factory=list)  # every ReferencePath used, in order

    def append(self, rec: SimRecord) -> None:
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    @property
    def num_replans(self) -> int:
        return sum(r.replan_event for r in self.records)

    @property
    def replan_times(self) -> list[float]:
        return [r.t for r in self.records if r.replan_event]

    @property
    def trigger_times(self) -> list[float]:
        return [r.t for r in self.records if r.trigger is not None]

    def summary(self) -> SimSummary:
        recs = self.records
        return SimSummary(
            mode=self.mode,
            arrival_time=self.arrival_time,
            min_ego_cyclist_distance=min((r.report.distance for r in recs), default=math.inf),
            num_replans=self.num_replans,
            collision=self.collision,
            min_r_policy=min((r.report.r_policymaker for r in recs), default=1.0),
            min_r_vru=min((r.report.r_vru for r in recs), default=1.0),
            min_r_driver=min((r.report.r_driver for r in recs), default=1.0),
            steps=len(recs),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(COLUMNS)
        for r in self.records:
            wr.writerow(r.row())
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def read_csv(path) -> list[dict]:
    """Parse a log written by :meth:`SimLog.write_csv`; numeric columns become floats."""
    out = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != COLUMNS:
            raise ValueError("unexpected log header")
        for row in rd:
            out.append({k: (v if k == "trigger" else float(v)) for k, v in row.items()})
    return out
