"""Compare the compiled and pure-Python kernels on representative workloads.

    python benchmarks/bench_kernels.py [--repeat 5]

Workloads: the condensed MPC QP (40 variables, default horizon), a dense
random box QP, the initial road plan, and an obstacle-avoiding replan.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from reasonsim import _kernels_py, kernels
from reasonsim.core import BicycleParams, ControlInput, CyclistState, Goal, RoadGeometry, VehicleState
from reasonsim.dynamics import affine_matrices
from reasonsim.mpc import MpcWeights, build_qp, reference_window
from reasonsim.planner import Planner, PlannerWeights, search


def _bench(fn, repeat):
    fn()  # warm-up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def workloads():
    p = BicycleParams()
    road = RoadGeometry()
    planner = Planner(road, p)
    w = MpcWeights()

    path = planner.plan(VehicleState(0, -1.75, 0, 0), Goal(140, -1.75), planner.field(()), PlannerWeights().nominal())
    window = reference_window(path, 30.0, w.N, p.Ts)
    models = [affine_matrices(window[k, 2], window[k, 3], 0.0, p.L, p.Ts) for k in range(w.N)]
    x0 = window[0] + np.array([0.0, 0.4, 0.05, -2.0])
    qp = build_qp(x0, window, models, w, ControlInput(), p)

    rng = np.random.default_rng(0)
    M = rng.normal(size=(40, 40))
    H = M @ M.T + 0.1 * np.eye(40)
    g = rng.normal(scale=20.0, size=40)

    def qp_case(H, g, lo, hi):
        return lambda fn: fn(H, g, lo, hi, np.zeros(len(g)), 1e-8, 100)

    def plan_case(start, cyclists, weights):
        fld = planner.field(cyclists)
        node = planner.lattice.snap(start.x, start.y, start.theta)
        target = Goal(140.0, -1.75, planner.cfg.goal_tolerance)
        return lambda fn: search(node, 0, target, fld, planner.primitives, weights, planner.lattice,
                                 planner.cfg.max_expansions, backend=fn)

    return [
        ("mpc qp (n=40)", "qp", qp_case(qp.H, qp.g, qp.lower, qp.upper)),
        ("random box qp (n=40)", "qp", qp_case(H, g, -np.ones(40), np.ones(40))),
        ("initial plan", "astar", plan_case(VehicleState(0, -1.75, 0, 0), (), PlannerWeights().nominal())),
        ("overtake replan", "astar",
         plan_case(VehicleState(50, -1.75, 0, 3), (CyclistState(60, -1.75, 3),), PlannerWeights().relaxed())),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        print("compiled extension unavailable; only the Python kernels can be timed")
    from importlib import import_module

    compiled = import_module("reasonsim._kernels") if kernels.BACKEND == "cython" else None
    fns = {"qp": (_kernels_py.solve_box_qp, compiled and compiled.solve_box_qp),
           "astar": (_kernels_py.lattice_astar, compiled and compiled.lattice_astar)}
    print(f"{'workload':<24}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for name, kind, case in workloads():
        py_fn, c_fn = fns[kind]
        t_py = _bench(lambda: case(py_fn), args.repeat)
        if c_fn is None:
            print(f"{name:<24}{t_py * 1e3:>14.3f}{'-':>14}{'-':>10}")
            continue
        t_c = _bench(lambda: case(c_fn), args.repeat)
        print(f"{name:<24}{t_py * 1e3:>14.3f}{t_c * 1e3:>14.3f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
