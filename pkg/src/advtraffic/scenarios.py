"""Reference scenarios for the single-lane and crossroad simulators.

Crossroad layout (``crossroad6``): three straight roads through the origin,
horizontal, vertical and one at 60 degrees, each carrying one lane per
direction offset 3.5 m to the right of the road axis.  Lanes span 400 m on
either side of the center.  Every lane except the northbound one has a stop
sign 50 m before the center.  Each lane holds 10 vehicles at the 16 m
headway; the lead of each lane sits at the distance before its sign listed in
:data:`CROSSROAD_LANES` (negative: already past it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import AdversaryParams, DriverParams, FormationParams, kmh_to_ms, two_second_headway
from .intersection import Formation, IntersectionConfig, Lane, TrafficModel
from .lane import LaneSimConfig


@dataclass(frozen=True)
class GridCell:
    v_kmh: float
    printed_b: float
    gain_kmh: float
    delay_s: float
    printed_count: int


def _grid():
    counts = iter((1, 2, 3, 11, 2, 3, 5, 17, 3, 5, 8, 29, 6, 9, 15, 53))
    cells = []
    for v, b, gains in ((20, 11, (1, 3)), (30, 16, (1.5, 4.5)), (50, 27, (2.5, 7.5)), (90, 50, (4.5, 13.5))):
        for g in gains:
            for eps in (0.1, 0.2):
                cells.append(GridCell(v, b, g, eps, next(counts)))
    return tuple(cells)


# Collision counts on a single lane, speed gains of 5% and 15%.
COLLISION_GRID = _grid()

# Printed reaction, braking and 2-second distances (m) at each reference speed.
SPEEDS_KMH = (20, 30, 50, 90, 130)
PRINTED_DISTANCES = {
    "reaction": (8.3, 12.5, 20.8, 37.5, 54.1),
    "braking": (2.2, 5, 14, 45.5, 95),
    "two_second": (11.1, 16.6, 27.7, 50, 72.2),
}

GRID_N_VEHICLES = 60


def grid_lane_config(cell: GridCell, *, printed_headway: bool = False, dt: float = 0.01,
                     n_vehicles: int = GRID_N_VEHICLES, record_trace: bool = False) -> LaneSimConfig:
    """Single-lane config for one grid cell; headway is the exact 2 s distance by default."""
    v = kmh_to_ms(cell.v_kmh)
    b = cell.printed_b if printed_headway else two_second_headway(v)
    return LaneSimConfig(
        formation=FormationParams(n_vehicles, v, b),
        adv=AdversaryParams(speed_gain=kmh_to_ms(cell.gain_kmh), react_delay=cell.delay_s),
        dt=dt,
        record_trace=record_trace,
    )


def narrative_lane_config(record_trace: bool = True) -> LaneSimConfig:
    """The 20-car run at 20 km/h with a 3 km/h gain and 200 ms delay."""
    cell = next(c for c in COLLISION_GRID if c.v_kmh == 20 and c.gain_kmh == 3 and c.delay_s == 0.2)
    return grid_lane_config(cell, n_vehicles=20, record_trace=record_trace)


CROSSROAD_HALF_LENGTH = 400.0
CROSSROAD_LANE_OFFSET = 3.5
CROSSROAD_SIGN_BEFORE_CENTER = 50.0
CROSSROAD_HEADWAY = 16.0
CROSSROAD_PER_LANE = 10
# Heading (deg), lead distance to its sign (m); the vertical northbound lane
# has no sign and its lead is 60 m before the center.
CROSSROAD_LANES = (
    ("east", 0.0, -7.0),
    ("west", 180.0, 77.0),
    ("north", 90.0, None),
    ("south", 270.0, 98.0),
    ("northeast", 60.0, 98.0),
    ("southwest", 240.0, 98.0),
)
CROSSROAD_PRIORITY_LEAD_BEFORE_CENTER = 60.0


def crossroad6(v: float = kmh_to_ms(30.0)) -> TrafficModel:
    """Six-lane, 60-vehicle crossroad (see module docstring); ``v`` in m/s."""
    half = CROSSROAD_HALF_LENGTH
    lanes, forms = [], []
    for name, heading, lead_to_sign in CROSSROAD_LANES:
        th = math.radians(heading)
        ux, uy = math.cos(th), math.sin(th)
        nx, ny = CROSSROAD_LANE_OFFSET * uy, -CROSSROAD_LANE_OFFSET * ux
        start = (nx - half * ux, ny - half * uy)
        end = (nx + half * ux, ny + half * uy)
        if lead_to_sign is None:
            signs = ()
            lead = half - CROSSROAD_PRIORITY_LEAD_BEFORE_CENTER
        else:
            sign = half - CROSSROAD_SIGN_BEFORE_CENTER
            signs = (sign,)
            lead = sign - lead_to_sign
        lanes.append(Lane.from_points(start, end, signs, name))
        forms.append(Formation.uniform(CROSSROAD_PER_LANE, v, CROSSROAD_HEADWAY, lead))
    return TrafficModel(tuple(lanes), tuple(forms), center=(0.0, 0.0))


def crossroad_config(gain_kmh: float, delay_s: float, dt: float = 0.01,
                     record_trace: bool = False, trace_every: int = 1) -> IntersectionConfig:
    return IntersectionConfig(
        driver=DriverParams(),
        adv=AdversaryParams(speed_gain=kmh_to_ms(gain_kmh), react_delay=delay_s),
        dt=dt,
        record_trace=record_trace,
        trace_every=trace_every,
    )
