"""Scenario execution behind the CLI.

Each ``run_*`` function takes a resolved :class:`ScenarioConfig`, writes its
CSV artifacts into ``out`` and returns a JSON-ready payload.  Payloads are
deterministic; timing lives only in the run record.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (
    braking_distance,
    inf_collision_reaction_delay,
    inf_collision_speed_gain,
    irc_speed_gain,
    max_collisions,
    reaction_distance,
    safe_headway,
)
from .config import ConfigError, Headway, ScenarioConfig, emit_config
from .core import StepLimitError, kmh_to_ms, two_second_headway
from .export import (
    dumps,
    write_coalescence_trace,
    write_csv,
    write_geometry,
    write_intersection_trace,
    write_json,
    write_lane_trace,
    write_probability_curve,
)
from .intersection import IntersectionConfig, run_model
from .lane import LaneSimConfig, run_lane
from .platoon import (
    PlatoonScenario,
    draw_platoon_positions,
    expected_platoon_size,
    max_platoon_span,
    probability_curve,
    simulate_coalescence,
)
from .scenarios import COLLISION_GRID, PRINTED_DISTANCES, SPEEDS_KMH, crossroad6, grid_lane_config


def _bound_record(bound) -> dict:
    return {"lambda": str(bound), "kind": bound.kind.value, "raw": bound.raw,
            "count": bound.count}


def analyze_payload(cfg: ScenarioConfig) -> dict:
    v = cfg.speed
    b = cfg.headway_m
    phys, driver, adv = cfg.phys(), cfg.driver(), cfg.adversary()
    delta = driver.react_time
    return {
        "speed_ms": v,
        "headway_m": b,
        "reaction_distance_m": reaction_distance(v, delta),
        "braking_distance_m": braking_distance(v, phys),
        "two_second_distance_m": two_second_headway(v),
        "max_collisions": _bound_record(max_collisions(v, b, delta, adv, phys)),
        "inf_collision_react_delay_s": inf_collision_reaction_delay(adv.speed_gain, v, b, delta),
        "inf_collision_speed_gain_ms": inf_collision_speed_gain(adv.react_delay, v, b, delta),
        "irc_speed_gain_ms": irc_speed_gain(v, phys),
        "safe_headway_s": safe_headway(v, adv, driver, phys).seconds,
    }


def lane_config_from(cfg: ScenarioConfig, record_trace: bool | None = None) -> LaneSimConfig:
    return LaneSimConfig(
        formation=cfg.formation(),
        driver=cfg.driver(),
        adv=cfg.adversary(),
        phys=cfg.phys(),
        dt=cfg.get("dt"),
        obstacle_pos=cfg.get("lane.obstacle_pos"),
        light_delay=cfg.get("lane.light_delay"),
        max_steps=cfg.get("lane.max_steps"),
        record_trace=cfg.get("lane.trace") if record_trace is None else record_trace,
    )


def run_lane_scenario(cfg: ScenarioConfig, out: Path | None) -> dict:
    res = run_lane(lane_config_from(cfg))
    if out is not None and res.trace is not None:
        write_lane_trace(out / "trace.csv", res)
    return {
        "collided_count": res.collided_count,
        "n_vehicles": int(res.crashed.size),
        "crashed": res.crashed.tolist(),
        "stop_positions_m": res.stop_positions.tolist(),
        "final_gaps_m": res.final_gaps.tolist(),
        "final_spacing_m": res.final_spacing.tolist(),
        "steps": res.steps,
        "time_s": res.time,
        "quiescent": res.quiescent,
    }


def run_intersection_scenario(cfg: ScenarioConfig, out: Path | None) -> dict:
    model = crossroad6(cfg.speed)
    icfg = IntersectionConfig(
        driver=cfg.driver(),
        adv=cfg.adversary(),
        phys=cfg.phys(),
        dt=cfg.get("dt"),
        vlen=cfg.get("formation.vlen"),
        vis_dist=cfg.get("formation.vis_dist"),
        max_steps=cfg.get("intersection.max_steps"),
        record_trace=out is not None,
        trace_every=cfg.get("intersection.trace_every"),
    )
    res = run_model(model, icfg)
    if out is not None:
        write_geometry(out / "geometry.csv", res)
        write_intersection_trace(out / "trace.csv", res)
    return {
        "counts": res.counts,
        "per_lane": {k: res.lane_counts(k) for k in ("crashed", "stopped", "departed")},
        "outcome": res.outcome,
        "steps": res.steps,
        "time_s": res.time,
        "quiescent": res.quiescent,
    }


def run_platoon_scenario(cfg: ScenarioConfig, out: Path | None) -> dict:
    if cfg.get("seed") is None:
        raise ConfigError("platoon scenarios draw random positions and need a seed")
    p = cfg.data["platoon"]
    v, b = cfg.speed, cfg.headway_m
    scen = PlatoonScenario(v=v, b=b, alpha=p["alpha"], p_adv=p["p_adv"], rho=p["rho"], T=p["horizon"])
    rng = np.random.default_rng(cfg.get("seed"))
    n = cfg.get("formation.n_vehicles")
    x0 = draw_platoon_positions(rng, n, v, p["alpha"], p["p_adv"])
    dt = cfg.get("dt")
    res = simulate_coalescence(x0, v, b, p["horizon"], p["sigma"], dt=dt, rho=p["rho"],
                               mode=p["mode"], trace_every=p["trace_every"])
    curve = probability_curve(scen, p["k_max"])
    if out is not None:
        write_coalescence_trace(out / "coalescence.csv", res, dt)
        write_probability_curve(out / "platoon_prob.csv", curve)
    return {
        "max_platoon_span": max_platoon_span(scen),
        "expected_platoon_size": expected_platoon_size(scen),
        "initial_positions_m": x0.tolist(),
        "chi_ms": res.chi.tolist(),
        "peak_gain_ms": res.peak_gain,
        "max_gain_ratio": res.max_gain_ratio,
        "final_headways_m": res.final_headways.tolist(),
    }


def _sweep_metric(child: ScenarioConfig, metric: str) -> dict:
    if metric == "max_collisions":
        bound = max_collisions(child.speed, child.headway_m, child.get("driver.react_time"),
                               child.adversary(), child.phys())
        rec = _bound_record(bound)
        rec["value"] = bound.as_number()
        return rec
    if metric == "safe_headway":
        return {"value": safe_headway(child.speed, child.adversary(), child.driver(), child.phys()).seconds}
    res = run_lane(lane_config_from(child, record_trace=False))
    return {"value": res.collided_count, "quiescent": res.quiescent}


def _axis_value(v):
    return v.value if isinstance(v, Headway) else v


def run_sweep(cfg: ScenarioConfig, out: Path | None = None, threads: int = 1) -> dict:
    """Evaluate the metric over the axis grid; rows in lexicographic axis order."""
    axes = cfg.get("sweep.axes")
    metric = cfg.get("sweep.metric")
    rows = list(cfg.sweep_rows())

    def evaluate(item):
        combo, child = item
        rec = {a.param: _axis_value(v) for a, v in zip(axes, combo)}
        try:
            rec.update(_sweep_metric(child, metric))
            rec["error"] = ""
        except Exception as exc:  # noqa: BLE001 - a failed row must not stop the sweep
            rec["error"] = f"{type(exc).__name__}: {exc}"
        return rec

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(evaluate, rows))
    else:
        records = [evaluate(r) for r in rows]

    if out is not None:
        keys = [a.param for a in axes]
        extra = sorted({k for r in records for k in r} - set(keys) - {"error"})
        header = keys + extra + ["error"]
        write_csv(out / "sweep.csv", header, ([r.get(k, "") for k in header] for r in records))
        with (out / "sweep.jsonl").open("w") as fh:
            for r in records:
                fh.write(dumps(r, indent=None) + "\n")
    return {"metric": metric, "rows": records}


def table_i_rows():
    """Rows ``(quantity, speed_kmh, computed, printed, delta)``."""
    funcs = {
        "reaction": lambda v: reaction_distance(v, 1.5),
        "braking": braking_distance,
        "two_second": two_second_headway,
    }
    rows = []
    for name, fn in funcs.items():
        for s, printed in zip(SPEEDS_KMH, PRINTED_DISTANCES[name]):
            value = fn(kmh_to_ms(s))
            rows.append((name, s, value, float(printed), value - printed))
    return rows


def table_iii_rows(dt: float = 0.01):
    """Rows ``(v_kmh, b_m, printed_b_m, gain_kmh, delay_ms, simulated, bound, printed, delta)``."""
    rows = []
    for cell in COLLISION_GRID:
        lc = grid_lane_config(cell, dt=dt)
        res = run_lane(lc)
        bound = max_collisions(lc.formation.v_init, lc.formation.headway, adv=lc.adv)
        rows.append((cell.v_kmh, lc.formation.headway, float(cell.printed_b), cell.gain_kmh,
                     int(round(cell.delay_s * 1000)), res.collided_count, str(bound),
                     cell.printed_count, res.collided_count - cell.printed_count))
    return rows


def reproduce_tables(out: Path, dt: float = 0.01) -> dict:
    t1 = table_i_rows()
    t3 = table_iii_rows(dt)
    write_csv(out / "table_i.csv", ("quantity", "speed_kmh", "computed_m", "printed_m", "delta_m"), t1)
    write_csv(out / "table_iii.csv", ("speed_kmh", "headway_m", "printed_headway_m", "gain_kmh",
                                      "delay_ms", "collisions_sim", "collisions_bound",
                                      "printed", "delta"), t3)
    return {
        "table_i_max_abs_delta_m": max(abs(r[4]) for r in t1),
        "table_iii_max_abs_delta": max(abs(r[8]) for r in t3),
        "table_iii_collisions": [r[5] for r in t3],
    }


RUNNERS = {
    "analyze": lambda cfg, out, threads: analyze_payload(cfg),
    "lane": lambda cfg, out, threads: run_lane_scenario(cfg, out),
    "intersection": lambda cfg, out, threads: run_intersection_scenario(cfg, out),
    "platoon": lambda cfg, out, threads: run_platoon_scenario(cfg, out),
    "sweep": lambda cfg, out, threads: run_sweep(cfg, out, threads),
}


def execute(cfg: ScenarioConfig, out: Path, threads: int = 1) -> dict:
    """Run a scenario, write ``run.json`` and the resolved config, return the record.

    Raises :class:`StepLimitError` after writing artifacts when a simulation
    ran out of steps.
    """
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    payload = RUNNERS[cfg.kind](cfg, out, threads)
    record = {
        "engine_version": __version__,
        "kind": cfg.kind,
        "config": cfg.to_dict(),
        "payload": payload,
        "wall_time_s": time.perf_counter() - start,
    }
    (out / "config.resolved.yaml").write_text(emit_config(cfg))
    write_json(out / "run.json", record)
    if payload.get("quiescent") is False:
        raise StepLimitError(f"{cfg.kind} run hit its step limit after {payload['steps']} steps")
    return record
