"""Multi-lane crossroad model and its geometry."""

import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from advtraffic.core import ParameterError
from advtraffic.export import GEOMETRY_COLUMNS, write_geometry
from advtraffic.intersection import (
    TRANSITIONS,
    Formation,
    IntersectionConfig,
    Lane,
    TrafficModel,
    VehicleState,
    collides,
    next_state,
    run_model,
    stop_visible,
    vehicle_xy,
)
from advtraffic.lane import run_lane
from advtraffic.scenarios import COLLISION_GRID, crossroad6, crossroad_config, grid_lane_config

R, B, C = VehicleState.RUNNING, VehicleState.BRAKING, VehicleState.CRASHED

# ---------------------------------------------------------------- geometry


def test_vehicle_xy_examples():
    assert vehicle_xy(Lane((0, 0), (20, 0)), 10.0) == (10.0, 0.0)
    x, y = vehicle_xy(Lane((3, 4), (3, 14), angle=math.pi / 2), 5.0)
    assert (x, y) == pytest.approx((3.0, 9.0), abs=1e-12)
    assert vehicle_xy(Lane((7, -2), (0, -2), direction=-1), 0.0) == (7.0, -2.0)


def test_vehicle_xy_rejects_out_of_range():
    lane = Lane((0, 0), (20, 0))
    for pos in (-1.0, 21.0):
        with pytest.raises(ParameterError):
            vehicle_xy(lane, pos)


def test_reverse_direction_lane():
    lane = Lane((10, 0), (0, 0), direction=-1, angle=0.0)
    assert lane.unit == (-1.0, pytest.approx(0.0))
    assert vehicle_xy(lane, 4.0) == pytest.approx((6.0, 0.0))


@pytest.mark.parametrize("kw", [
    {"direction": 0},
    {"angle": 2 * math.pi},
    {"end": (0, 10)},
    {"stop_signs": (5.0, 2.0)},
    {"stop_signs": (50.0,)},
])
def test_lane_rejects(kw):
    base = {"start": (0, 0), "end": (20, 0)}
    base.update(kw)
    with pytest.raises(ParameterError):
        Lane(**base)


def test_lane_from_points_angle():
    lane = Lane.from_points((0, 0), (0, -5))
    assert lane.angle == pytest.approx(1.5 * math.pi)
    assert 0.0 <= Lane.from_points((0, 0), (5, -1e-18)).angle < 2 * math.pi


def test_collides_examples():
    lane = Lane((0, 0), (100, 0))
    assert not collides((lane, 50.0), (lane, 55.1), 5.0)
    assert not collides((lane, 50.0), (lane, 55.0), 5.0)
    assert collides((lane, 50.0), (lane, 54.9), 5.0)
    cross = Lane((50, -50), (50, 50), angle=math.pi / 2)
    assert collides((lane, 50.0), (cross, 50.0), 5.0)


def test_stop_visible_examples():
    lane = Lane((0, 0), (500, 0), stop_signs=(200.0,))
    assert stop_visible(150.0, lane, 100.0)
    assert not stop_visible(50.0, lane, 100.0)
    assert not stop_visible(250.0, lane, 100.0)


def test_intersection_points_lie_on_both_lanes():
    model = crossroad6()
    # 15 lane pairs minus the three antiparallel ones.
    assert len(model.intersection_points) == 12
    for p in model.intersection_points:
        a, b = model.lanes[p.lane_a], model.lanes[p.lane_b]
        xa, ya = vehicle_xy(a, p.pos_a)
        xb, yb = vehicle_xy(b, p.pos_b)
        assert math.hypot(xa - xb, ya - yb) < 1e-6
        assert math.hypot(xa - p.xy[0], ya - p.xy[1]) < 1e-6


def test_model_rejects():
    lane = Lane((0, 0), (100, 0))
    with pytest.raises(ParameterError):
        TrafficModel((lane,), ())
    with pytest.raises(ParameterError):
        TrafficModel((lane,), (Formation((150.0,), (1.0,)),))
    with pytest.raises(ParameterError):
        Formation((10.0, 20.0), (1.0, 1.0))
    with pytest.raises(ParameterError):
        Formation((10.0,), (-1.0,))


def test_config_rejects():
    for kw in ({"dt": 0.0}, {"vlen": 0.0}, {"max_steps": 0}, {"trace_every": 0}):
        with pytest.raises(ParameterError):
            IntersectionConfig(**kw)

# ---------------------------------------------------------------- state rule


def test_next_state_examples():
    assert next_state(R, collided=False, leader_braking_or_crashed=True, sign_visible=False) is B
    assert next_state(R, collided=False, leader_braking_or_crashed=False, sign_visible=False) is R
    assert next_state(R, collided=True, leader_braking_or_crashed=False, sign_visible=False) is C
    assert next_state(R, collided=False, leader_braking_or_crashed=False, sign_visible=True) is B


@given(st.sampled_from([R, B, C]), st.booleans(), st.booleans(), st.booleans())
def test_next_state_follows_edges(cur, hit, lead, sign):
    new = next_state(cur, collided=hit, leader_braking_or_crashed=lead, sign_visible=sign)
    assert new is cur or (cur, new) in TRANSITIONS
    if cur is C:
        assert new is C


def test_transition_soundness():
    res = run_model(crossroad6(), crossroad_config(4.5, 0.2))
    assert res.transitions <= TRANSITIONS
    assert (B, C) in res.transitions


def test_crashed_vehicles_are_frozen():
    res = run_model(crossroad6(), crossroad_config(4.5, 0.2, record_trace=True, trace_every=5))
    tr = res.trace
    for i in np.nonzero(tr.state[-1] == 2)[0]:
        k = int(np.argmax(tr.state[:, i] == 2))
        assert np.all(tr.state[k:, i] == 2)
        assert np.all(tr.pos[k:, i] == tr.pos[k, i])
        assert np.all(tr.speed[k:, i] == 0.0)

# ---------------------------------------------------------------- runs


def test_free_lane_all_depart():
    lane = Lane((0, 0), (300, 0))
    model = TrafficModel((lane,), (Formation.uniform(5, 10.0, 20.0, 120.0),))
    res = run_model(model)
    assert res.counts == {"crashed": 0, "stopped": 0, "departed": 5, "running": 0}
    assert res.quiescent and np.all(np.isinf(res.brake_times))


def test_running_vehicle_advances_v_dt():
    lane = Lane((0, 0), (300, 0))
    model = TrafficModel((lane,), (Formation((10.0,), (8.0,)),))
    res = run_model(model, IntersectionConfig(max_steps=7))
    assert res.final_pos[0] == pytest.approx(10.0 + 7 * 0.01 * 8.0, abs=1e-12)
    assert not res.quiescent and res.outcome == ["running"]


def test_sign_stops_lead():
    lane = Lane((0, 0), (1000, 0), stop_signs=(500.0,))
    model = TrafficModel((lane,), (Formation((300.0,), (10.0,)),))
    res = run_model(model)
    # Sign enters view at 400 m, 10 s in; then reaction plus braking.
    assert res.brake_times[0] == pytest.approx(11.5)
    assert res.final_pos[0] == pytest.approx(400.0 + 15.0 + 100.0 / 13.72, abs=1e-9)
    assert res.outcome == ["stopped"]


def test_parked_vehicle_ignores_gain():
    lane = Lane((0, 0), (1000, 0))
    model = TrafficModel((lane,), (Formation((500.0, 100.0), (0.0, 10.0)),))
    res = run_model(model, IntersectionConfig(adv=crossroad_config(3.0, 0).adv))
    assert res.final_pos[0] == 500.0
    assert res.outcome[0] == "crashed"


def test_cross_lane_crash_is_symmetric():
    a = Lane((-100, 0), (100, 0))
    b = Lane((0, -100), (0, 100), angle=math.pi / 2)
    model = TrafficModel((a, b), (Formation((50.0,), (10.0,)), Formation((50.0,), (10.0,))))
    res = run_model(model)
    assert res.outcome == ["crashed", "crashed"]
    assert res.crash_times[0] == res.crash_times[1]


def test_step_limit_reported():
    res = run_model(crossroad6(), IntersectionConfig(max_steps=5))
    assert not res.quiescent and res.count("running") > 0


@pytest.mark.parametrize("gain, delay, expected", [
    (1.5, 0.0, {"crashed": 0, "stopped": 49, "departed": 11, "running": 0}),
    (4.5, 0.2, {"crashed": 44, "stopped": 5, "departed": 11, "running": 0}),
])
def test_crossroad_counts(gain, delay, expected):
    res = run_model(crossroad6(), crossroad_config(gain, delay))
    assert res.counts == expected
    assert res.quiescent


def _lane_pair(cell):
    """A single-lane model equivalent to a one-lane simulation of ``cell``."""
    cfg = grid_lane_config(cell, record_trace=False)
    f = cfg.formation
    off = 4000.0
    obst = off + cfg.obstacle
    lane = Lane.from_points((0, 0), (8000, 0), (obst,))
    # A parked vehicle stands in for the obstacle; the sign is visible at once.
    pos = (obst + f.vlen,) + tuple(off - i * f.spacing for i in range(f.n_vehicles))
    speeds = (0.0,) + (f.v_init,) * f.n_vehicles
    model = TrafficModel((lane,), (Formation(pos, speeds),))
    icfg = IntersectionConfig(adv=cfg.adv, vis_dist=f.headway, vlen=f.vlen)
    return cfg, model, icfg, off


@pytest.mark.parametrize("cell", COLLISION_GRID[::3], ids=str)
def test_reduction_to_lane_sim(cell):
    cfg, model, icfg, off = _lane_pair(cell)
    lane_res = run_lane(cfg)
    res = run_model(model, icfg)
    assert sum(o == "crashed" for o in res.outcome[1:]) == lane_res.collided_count
    assert np.max(np.abs(res.final_pos[1:] - off - lane_res.stop_positions)) < 1e-9
    assert np.allclose(res.brake_times[1:], lane_res.brake_times, atol=1e-9)


def _moved(model, angle, shift):
    c, s = math.cos(angle), math.sin(angle)

    def tf(p):
        return (c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1])

    lanes = tuple(Lane.from_points(tf(ln.start), tf(ln.end), ln.stop_signs, ln.name)
                  for ln in model.lanes)
    return TrafficModel(lanes, model.formations, center=tf(model.center))


@pytest.mark.parametrize("angle, shift", [(0.7, (120.0, -35.0)), (math.pi, (0.0, 0.0))])
def test_rigid_motion_invariance(angle, shift):
    base = run_model(crossroad6(), crossroad_config(4.5, 0.2))
    moved = run_model(_moved(crossroad6(), angle, shift), crossroad_config(4.5, 0.2))
    assert moved.outcome == base.outcome
    fin = np.isfinite(base.crash_times)
    assert np.array_equal(fin, np.isfinite(moved.crash_times))
    assert np.allclose(moved.crash_times[fin], base.crash_times[fin], atol=1e-9)
    assert np.allclose(moved.final_pos, base.final_pos, atol=1e-9)

# ---------------------------------------------------------------- headway traces


@pytest.fixture(scope="module")
def calm_run():
    return run_model(crossroad6(), crossroad_config(1.5, 0.0, record_trace=True))


def test_departing_lead_headway_grows(calm_run):
    res, tr = calm_run, calm_run.trace
    lead = int(np.nonzero((res.lane_id == 0) & (res.index == 0))[0][0])
    assert res.outcome[lead] == "departed"
    after = tr.times >= res.brake_times[lead + 1]
    hw = tr.headway[after, lead]
    hw = hw[np.isfinite(hw)]
    assert hw.size > 10
    assert np.all(np.diff(hw) >= -1e-9)


def test_stopped_headways_settle(calm_run):
    res, tr = calm_run, calm_run.trace
    for i in range(len(res.outcome) - 1):
        j = i + 1
        if res.lane_id[j] != res.lane_id[i] or res.outcome[i] != "stopped" \
                or res.outcome[j] != "stopped":
            continue
        assert tr.headway[-1, i] == tr.headway[-50, i]
        assert tr.headway[-1, i] > 0


def test_geometry_csv(tmp_path):
    lane = Lane((0, 0), (30, 0))
    model = TrafficModel((lane,), (Formation((20.0, 5.0), (10.0, 10.0)),))
    res = run_model(model, IntersectionConfig(record_trace=True, trace_every=50))
    rows = list(csv.reader(write_geometry(tmp_path / "g.csv", res).open()))
    assert tuple(rows[0]) == GEOMETRY_COLUMNS
    body = rows[1:]
    assert body[0] == ["0", "0.0", "0", "20.0", "0.0", "running"]
    assert all(r[5] != "departed" for r in body)
    assert {r[2] for r in body} == {"0", "1"}
