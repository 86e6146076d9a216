import math
import re

import pytest

from reasonsim.cli import EXIT_COLLISION, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, compare_command, main, run_command
from reasonsim.config import ConfigError, parse_scenario, parse_scenario_text
from reasonsim.core import RoadGeometry
from reasonsim.reasons import (
    ReasonParams,
    driver_score,
    policymaker_score,
    vru_comfort_score,
    vru_safety_score,
)
from reasonsim.scenario import Scenario
from reasonsim.simlog import CSV_HEADER, read_csv

REFERENCE_CONFIG = """
[reasons]
d_th_vru = 8
t_th_vru = 5
d_th_driver = 12
t_th_driver = 10
[thresholds]
tau = 0.7
"""


@pytest.fixture()
def cfg(tmp_path):
    def write(text=""):
        p = tmp_path / "scenario.ini"
        p.write_text(text)
        return str(p)

    return write


@pytest.fixture(scope="module")
def compared(tmp_path_factory):
    out = tmp_path_factory.mktemp("cmp")
    cfg = out / "empty.ini"
    cfg.write_text("")
    return compare_command(str(cfg), str(out), quiet=True), out


# config parsing


def test_empty_file_gives_defaults(cfg):
    sc = parse_scenario(cfg()).scenario
    d = Scenario()
    assert sc.road == d.road and sc.ego_start == d.ego_start and sc.goal == d.goal
    assert sc.cyclist_start == d.cyclist_start and sc.reason_params == d.reason_params
    assert sc.thresholds == d.thresholds and sc.planner == d.planner and sc.bicycle == d.bicycle


def test_reference_config_values(cfg):
    sc = parse_scenario(cfg(REFERENCE_CONFIG)).scenario
    assert sc.reason_params == ReasonParams(d_th_vru=8, t_th_vru=5, d_th_driver=12, t_th_driver=10)
    assert (sc.thresholds.tau_policymaker, sc.thresholds.tau_vru, sc.thresholds.tau_driver) == (0.7, 0.7, 0.7)


def test_invariant_violation_named():
    with pytest.raises(ConfigError, match="k2 must be > 0"):
        parse_scenario_text("[reasons]\nk2 = -1\n")


@pytest.mark.parametrize("text, needle", [
    ("[reasons]\nk9 = 1\n", "k9"),
    ("[weather]\nrain = 1\n", "weather"),
    ("[ego]\nv_max = fast\n", "v_max"),
])
def test_rejections_name_the_problem(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_scenario_text(text)


def test_specific_tau_overrides_shared(cfg):
    sc = parse_scenario(cfg("[thresholds]\ntau = 0.5\ntau_vru = 0.6\n")).scenario
    assert (sc.thresholds.tau_policymaker, sc.thresholds.tau_vru) == (0.5, 0.6)


def test_nested_sections_parse(cfg):
    text = """
[road]
lane_width = 3.75
[ego]
v_max = 7
wheelbase = 2.9
[planner]
curvatures = 0, 0.1, -0.1
[mpc]
q_perp = 20
horizon = 15
[sim]
ts = 0.05
duration_max = 80
"""
    c = parse_scenario(cfg(text))
    sc = c.scenario
    assert sc.road.lane_width == 3.75 and sc.planner.v_max == 7 and sc.bicycle.L == 2.9
    assert sc.planner.curvatures == (0.0, 0.1, -0.1)
    assert sc.mpc_weights.Q_perp == 20 and sc.mpc_weights.N == 15 and sc.mpc_weights.Q_f[1, 1] == 40
    assert sc.bicycle.Ts == 0.05 and sc.sim_duration_max == 80


def test_missing_file():
    with pytest.raises(OSError):
        parse_scenario("/nonexistent/scenario.ini")


# run / compare


def test_run_baseline_artifacts(cfg, tmp_path):
    art = run_command(cfg(REFERENCE_CONFIG), "baseline", str(tmp_path / "b"), quiet=True)
    for p in (art.log_csv, art.trajectory_svg, art.scores_svg, art.speed_svg, art.summary_txt):
        with open(p) as fh:
            assert fh.read()
    with open(art.log_csv) as fh:
        assert fh.readline().rstrip("\n") == CSV_HEADER
    text = open(art.summary_txt).read()
    assert "num_replans = 0" in text and "mode = baseline" in text
    kv = dict(line.split(" = ") for line in text.splitlines())
    assert float(kv["arrival_time"]) == art.summary.arrival_time
    assert float(kv["min_distance"]) == art.summary.min_ego_cyclist_distance


def test_scores_svg_has_threshold_line_and_trigger_markers(compared):
    res, out = compared
    for mode in ("baseline", "replanner"):
        svg = (out / mode / "scores.svg").read_text()
        log = res["results"][next(m for m in res["results"] if m.value == mode)].log
        assert svg.count('class="marker"') == len(log.trigger_times) > 0
        assert re.search(r'class="hline"[^>]*><title>tau = 0.7</title>', svg)


def test_compare_defaults(compared):
    res, out = compared
    assert res["ratio"] < 0.7
    text = (out / "comparison.csv").read_text()
    assert text.startswith("metric,baseline,replanner\n") and "arrival_ratio" in text
    base, rep = (res["results"][m].summary for m in sorted(res["results"], key=lambda m: m.value))
    assert base.num_replans == 0 and rep.num_replans >= 1
    assert rep.arrival_time < base.arrival_time


def test_csv_round_trip_scores(compared):
    _, out = compared
    params = ReasonParams()
    road = RoadGeometry()
    for mode in ("baseline", "replanner"):
        for row in read_csv(out / mode / "log.csv"):
            d = math.hypot(row["cyclist_x"] - row["x"], row["cyclist_y"] - row["y"])
            assert abs(d - row["d_veh_vru"]) <= 1e-9
            assert abs(policymaker_score(road.centerline_y - row["y"], params.k1) - row["r_policy"]) <= 1e-9
            assert abs(vru_safety_score(d, params.d_th_vru, params.k2) - row["r_vru_safety"]) <= 1e-9
            assert abs(vru_comfort_score(row["t_close_vru"], d, params) - row["r_vru_comfort"]) <= 1e-9
            assert abs(row["r_vru_safety"] * row["r_vru_comfort"] - row["r_vru"]) <= 1e-9
            assert abs(driver_score(row["t_behind_driver"], d, params) - row["r_driver"]) <= 1e-9


def test_run_is_byte_identical(cfg, tmp_path):
    path = cfg()
    a = run_command(path, "replanner", str(tmp_path / "a"), quiet=True)
    b = run_command(path, "replanner", str(tmp_path / "b"), quiet=True)
    assert open(a.log_csv, "rb").read() == open(b.log_csv, "rb").read()


def test_compare_tiny_tau_degenerates(cfg, tmp_path):
    res = compare_command(cfg("[thresholds]\ntau = 0.01\n"), str(tmp_path), quiet=True)
    assert res["ratio"] == 1.0
    assert all(a.summary.num_replans == 0 for a in res["results"].values())


def test_compare_fast_cyclist_identical(cfg, tmp_path):
    res = compare_command(cfg("[cyclist]\nspeed = 8\n"), str(tmp_path), quiet=True)
    assert res["ratio"] == 1.0
    assert (tmp_path / "baseline" / "log.csv").read_bytes() == (tmp_path / "replanner" / "log.csv").read_bytes()


# exit codes


def test_exit_ok_and_summary_printed(cfg, tmp_path, capsys):
    assert main(["run", "--config", cfg(), "--mode", "baseline", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr()
    assert "num_replans = 0" in out.out and "t =" in out.err


def test_quiet_suppresses_progress(cfg, tmp_path, capsys):
    main(["run", "--config", cfg(), "--mode", "baseline", "--out", str(tmp_path), "--quiet"])
    assert capsys.readouterr().err == ""


def test_exit_config_error(cfg, tmp_path, capsys):
    assert main(["run", "--config", cfg("[reasons]\nk2 = -1\n"), "--mode", "baseline", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "k2 must be > 0" in capsys.readouterr().err
    assert main(["compare", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_exit_infeasible(cfg, tmp_path, capsys):
    code = main(["run", "--config", cfg("[sim]\ngoal_y = -3.4\n"), "--mode", "baseline", "--out", str(tmp_path)])
    assert code == EXIT_INFEASIBLE
    assert "scenario infeasible" in capsys.readouterr().err


def test_exit_collision(cfg, tmp_path):
    code = main(["run", "--config", cfg("[mpc]\nd_stop = 0\nk_gap = 100\n"), "--mode", "baseline",
                 "--out", str(tmp_path), "--quiet"])
    assert code == EXIT_COLLISION
    assert (tmp_path / "log.csv").exists()


def test_bad_mode_rejected(cfg, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--config", cfg(), "--mode", "fast", "--out", str(tmp_path)])
    assert exc.value.code == 2
