"""Multi-lane crossroad simulation.

Lanes are straight segments carrying one ordered formation each (index 0
leads).  A vehicle is ``running`` until it reacts to a stimulus (a stop sign
entering its visual range, or the vehicle ahead braking or crashing), then
``braking`` until it stops, and ``crashed`` once it touches another vehicle.
Contact is symmetric: both parties crash.  Within a lane the follower is
clamped to the point of contact; across lanes two vehicles collide when their
reference points come closer than one vehicle length.

Motion uses the same closed-form kinematics as :mod:`advtraffic.lane`, so a
single collinear lane reduces exactly to the single-lane simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .core import (
    VIS_DIST_DEFAULT,
    VLEN_DEFAULT,
    AdversaryParams,
    DriverParams,
    ParameterError,
    PhysConstants,
)
from .kinematics import CONTACT_TOL, distance_travelled, speed_at

GEOM_TOL = 1e-6
TWO_PI = 2.0 * math.pi


class VehicleState(str, Enum):
    RUNNING = "running"
    BRAKING = "braking"
    CRASHED = "crashed"


# Legal state changes; every state may also persist.
TRANSITIONS = frozenset({
    (VehicleState.RUNNING, VehicleState.BRAKING),
    (VehicleState.RUNNING, VehicleState.CRASHED),
    (VehicleState.BRAKING, VehicleState.CRASHED),
})

DEPARTED = "departed"
_CODE_NAMES = (VehicleState.RUNNING.value, VehicleState.BRAKING.value,
               VehicleState.CRASHED.value, DEPARTED)


@dataclass
class Vehicle:
    """Snapshot of one vehicle.

    ``t_break`` is the time braking started (``inf`` if it never did) and
    ``v_init`` the running speed it brakes from.
    """

    speed: float
    pos: float
    state: VehicleState
    t_break: float = math.inf
    v_init: float = 0.0
    departed: bool = False


def next_state(current: VehicleState, *, collided: bool, leader_braking_or_crashed: bool,
               sign_visible: bool) -> VehicleState:
    """One application of the vehicle state rule.

    Crashed is absorbing and a braking vehicle never returns to running.
    """
    if current is VehicleState.CRASHED or collided:
        return VehicleState.CRASHED
    if current is VehicleState.BRAKING or leader_braking_or_crashed or sign_visible:
        return VehicleState.BRAKING
    return VehicleState.RUNNING


@dataclass(frozen=True)
class Lane:
    """A straight lane travelled from ``start`` toward ``end``.

    Along-lane positions run from 0 at ``start`` to ``length`` at ``end``;
    ``stop_signs`` are along-lane positions.
    """

    start: tuple[float, float]
    end: tuple[float, float]
    direction: int = 1
    angle: float = 0.0
    stop_signs: tuple[float, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "start", (float(self.start[0]), float(self.start[1])))
        object.__setattr__(self, "end", (float(self.end[0]), float(self.end[1])))
        object.__setattr__(self, "stop_signs", tuple(float(d) for d in self.stop_signs))
        if self.direction not in (-1, 1):
            raise ParameterError(f"direction must be -1 or +1, got {self.direction}")
        if not 0.0 <= self.angle < TWO_PI:
            raise ParameterError(f"angle must be in [0, 2pi), got {self.angle}")
        if self.length <= 0:
            raise ParameterError("lane start and end coincide")
        ux, uy = self.unit
        ex = self.start[0] + self.length * ux
        ey = self.start[1] + self.length * uy
        if math.hypot(ex - self.end[0], ey - self.end[1]) > GEOM_TOL:
            raise ParameterError("direction and angle do not point from start to end")
        signs = self.stop_signs
        if list(signs) != sorted(signs):
            raise ParameterError("stop signs must be sorted ascending")
        if any(d < 0 or d > self.length for d in signs):
            raise ParameterError("stop signs must lie within the lane")

    @classmethod
    def from_points(cls, start, end, stop_signs: Sequence[float] = (), name: str = "") -> "Lane":
        angle = math.atan2(end[1] - start[1], end[0] - start[0]) % TWO_PI
        if angle >= TWO_PI:
            angle = 0.0
        return cls(tuple(start), tuple(end), 1, angle, tuple(stop_signs), name)

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    @property
    def unit(self) -> tuple[float, float]:
        return (self.direction * math.cos(self.angle), self.direction * math.sin(self.angle))

    def next_sign(self, pos: float) -> float | None:
        for d in self.stop_signs:
            if d >= pos:
                return d
        return None


def vehicle_xy(lane: Lane, pos):
    """Map along-lane position(s) to plane coordinates."""
    p = np.asarray(pos, dtype=float)
    if np.any(p < -GEOM_TOL) or np.any(p > lane.length + GEOM_TOL):
        raise ParameterError(f"position outside lane [0, {lane.length}]")
    ux, uy = lane.unit
    x = lane.start[0] + p * ux
    y = lane.start[1] + p * uy
    if p.ndim == 0:
        return float(x), float(y)
    return x, y


def collides(a: tuple[Lane, float], b: tuple[Lane, float], vlen: float = VLEN_DEFAULT) -> bool:
    """Whether two vehicles, given as ``(lane, pos)``, are closer than ``vlen``."""
    xa, ya = vehicle_xy(*a)
    xb, yb = vehicle_xy(*b)
    return math.hypot(xa - xb, ya - yb) < vlen


def stop_visible(pos: float, lane: Lane, vis_dist: float = VIS_DIST_DEFAULT) -> bool:
    d = lane.next_sign(pos)
    return d is not None and d - pos <= vis_dist


@dataclass(frozen=True)
class Formation:
    """Front-bumper positions (lead first) and initial speeds of one lane."""

    positions: tuple[float, ...]
    speeds: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(float(p) for p in self.positions))
        object.__setattr__(self, "speeds", tuple(float(v) for v in self.speeds))
        if len(self.positions) != len(self.speeds):
            raise ParameterError("positions and speeds differ in length")
        if any(v < 0 for v in self.speeds):
            raise ParameterError("initial speeds must be >= 0")
        if any(b >= a for a, b in zip(self.positions, self.positions[1:])):
            raise ParameterError("formation positions must decrease from the lead backwards")

    @classmethod
    def uniform(cls, n: int, v: float, headway: float, lead_pos: float,
                vlen: float = VLEN_DEFAULT) -> "Formation":
        spacing = headway + vlen
        return cls(tuple(lead_pos - i * spacing for i in range(n)), (v,) * n)

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True)
class IntersectionPoint:
    lane_a: int
    lane_b: int
    pos_a: float
    pos_b: float
    xy: tuple[float, float]


def _segment_crossing(a: Lane, b: Lane):
    (ax, ay), (bx, by) = a.start, b.start
    (ux, uy), (wx, wy) = a.unit, b.unit
    denom = ux * wy - uy * wx
    if abs(denom) < 1e-12:
        return None
    dx, dy = bx - ax, by - ay
    sa = (dx * wy - dy * wx) / denom
    sb = (dx * uy - dy * ux) / denom
    if -GEOM_TOL <= sa <= a.length + GEOM_TOL and -GEOM_TOL <= sb <= b.length + GEOM_TOL:
        return sa, sb
    return None


@dataclass(frozen=True)
class TrafficModel:
    """Lanes with one formation each, plus their crossing points.

    ``center`` is the reference for distance-to-center traces; it defaults to
    the centroid of the intersection points (or the origin if there are none).
    """

    lanes: tuple[Lane, ...]
    formations: tuple[Formation, ...]
    center: tuple[float, float] | None = None
    intersection_points: tuple[IntersectionPoint, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "lanes", tuple(self.lanes))
        object.__setattr__(self, "formations", tuple(self.formations))
        if len(self.lanes) != len(self.formations):
            raise ParameterError("need exactly one formation per lane")
        for lane, form in zip(self.lanes, self.formations):
            if any(p < 0 or p > lane.length for p in form.positions):
                raise ParameterError(f"formation does not fit on lane {lane.name or '?'}")
        points = []
        for i, a in enumerate(self.lanes):
            for j in range(i + 1, len(self.lanes)):
                hit = _segment_crossing(a, self.lanes[j])
                if hit is None:
                    continue
                sa, sb = hit
                pa = vehicle_xy(a, min(max(sa, 0.0), a.length))
                pb = vehicle_xy(self.lanes[j], min(max(sb, 0.0), self.lanes[j].length))
                if math.hypot(pa[0] - pb[0], pa[1] - pb[1]) > GEOM_TOL:
                    raise ParameterError("inconsistent intersection point")
                points.append(IntersectionPoint(i, j, sa, sb, pa))
        object.__setattr__(self, "intersection_points", tuple(points))
        if self.center is None:
            if points:
                c = (sum(p.xy[0] for p in points) / len(points),
                     sum(p.xy[1] for p in points) / len(points))
            else:
                c = (0.0, 0.0)
            object.__setattr__(self, "center", c)

    @property
    def n_vehicles(self) -> int:
        return sum(len(f) for f in self.formations)


@dataclass(frozen=True)
class IntersectionConfig:
    """Run parameters shared by every vehicle of a :class:`TrafficModel`.

    The adversarial speed gain applies to moving vehicles only; a vehicle
    parked at speed 0 stays parked.
    """

    driver: DriverParams = DriverParams()
    adv: AdversaryParams = AdversaryParams()
    phys: PhysConstants = PhysConstants()
    dt: float = 0.01
    vlen: float = VLEN_DEFAULT
    vis_dist: float = VIS_DIST_DEFAULT
    max_steps: int = 1_000_000
    record_trace: bool = False
    trace_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        if not self.vlen > 0 or not self.vis_dist >= 0:
            raise ParameterError("vlen must be > 0 and vis_dist >= 0")
        if self.max_steps < 1 or self.trace_every < 1:
            raise ParameterError("max_steps and trace_every must be >= 1")

    @property
    def reaction(self) -> float:
        return self.driver.react_time + self.adv.react_delay


class ModelState:
    """Flat per-vehicle arrays for all lanes; vehicles are ordered lane-major."""

    def __init__(self, model: TrafficModel, config: IntersectionConfig):
        self.model = model
        self.config = config
        lane_id, idx, pos0, v_nom, pred = [], [], [], [], []
        for k, form in enumerate(model.formations):
            base = len(pos0)
            for i, (p, v) in enumerate(zip(form.positions, form.speeds)):
                lane_id.append(k)
                idx.append(i)
                pos0.append(p)
                v_nom.append(v)
                pred.append(base + i - 1 if i > 0 else -1)
        self.lane_id = np.array(lane_id, dtype=int)
        self.index = np.array(idx, dtype=int)
        self.pred = np.array(pred, dtype=int)
        self.pos0 = np.array(pos0, dtype=float)
        v_nom = np.array(v_nom, dtype=float)
        self.v_init = np.where(v_nom > 0, v_nom + config.adv.speed_gain, 0.0)
        if np.any(self.v_init < 0):
            raise ParameterError("manipulated speed is negative")
        n = self.pos0.size
        self.step = 0
        self.t = 0.0
        self.pos = self.pos0.copy()
        self.speed = self.v_init.copy()
        self.t_stim = np.full(n, np.inf)
        self.t_break = np.full(n, np.inf)
        self.crash_time = np.full(n, np.inf)
        self.crashed = np.zeros(n, dtype=bool)
        self.departed = np.zeros(n, dtype=bool)
        self.lengths = np.array([ln.length for ln in model.lanes])
        lanes = model.lanes
        self._ux = np.array([lanes[k].unit[0] for k in self.lane_id])
        self._uy = np.array([lanes[k].unit[1] for k in self.lane_id])
        self._sx = np.array([lanes[k].start[0] for k in self.lane_id])
        self._sy = np.array([lanes[k].start[1] for k in self.lane_id])
        self._same_lane = self.lane_id[:, None] == self.lane_id[None, :]
        self._sign_time = np.array([self._first_sign_time(i) for i in range(n)])

    def _first_sign_time(self, i: int) -> float:
        """Time the next sign ahead enters the visual range, assuming no braking."""
        lane = self.model.lanes[self.lane_id[i]]
        d = lane.next_sign(self.pos0[i])
        if d is None:
            return math.inf
        lag = d - self.config.vis_dist - self.pos0[i]
        if lag <= 0:
            return 0.0
        return lag / self.v_init[i] if self.v_init[i] > 0 else math.inf

    @property
    def active(self) -> np.ndarray:
        return ~self.departed

    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        return self._sx + self.pos * self._ux, self._sy + self.pos * self._uy

    def codes(self) -> np.ndarray:
        code = np.where(self.t_break <= self.t, 1, 0)
        code = np.where(self.crashed, 2, code)
        return np.where(self.departed, 3, code)

    def vehicle(self, i: int) -> Vehicle:
        return Vehicle(speed=float(self.speed[i]), pos=float(self.pos[i]),
                       state=VehicleState(_CODE_NAMES[min(self.codes()[i], 2)]),
                       t_break=float(self.t_break[i]), v_init=float(self.v_init[i]),
                       departed=bool(self.departed[i]))

    def state_of(self, i: int) -> VehicleState:
        return VehicleState(_CODE_NAMES[min(int(self.codes()[i]), 2)])


def _schedule(st: ModelState) -> None:
    """Record stimuli seen at the current time and schedule brake onsets."""
    reaction = st.config.reaction
    t = st.t
    has_pred = st.pred >= 0
    p = np.where(has_pred, st.pred, 0)
    while True:
        waiting = np.isinf(st.t_stim) & ~st.crashed & ~st.departed
        if not waiting.any():
            return
        lead_event = np.minimum(np.where(st.t_break[p] <= t, st.t_break[p], np.inf),
                                st.crash_time[p])
        lead_event = np.where(has_pred, lead_event, np.inf)
        sign = np.where(st._sign_time <= t, st._sign_time, np.inf)
        stim = np.minimum(lead_event, sign)
        new = waiting & np.isfinite(stim)
        if not new.any():
            return
        st.t_stim[new] = stim[new]
        st.t_break[new] = stim[new] + reaction
        # Zero reaction time can make a follower brake within the same instant.
        if not np.any(st.t_break[new] <= t):
            return


def _crash(st: ModelState, i: int) -> None:
    if not st.crashed[i]:
        st.crashed[i] = True
        st.crash_time[i] = st.t


def step_model(st: ModelState) -> ModelState:
    """Advance the model in place by one time step and return it."""
    cfg = st.config
    _schedule(st)
    st.step += 1
    st.t = st.step * cfg.dt
    decel = cfg.phys.decel
    vlen = cfg.vlen

    moving = ~st.crashed & ~st.departed
    cand = np.where(moving, st.pos0 + distance_travelled(st.t, st.v_init, st.t_break, decel), st.pos)

    has_pred = st.pred >= 0
    p = np.where(has_pred, st.pred, 0)
    limit = np.where(has_pred & ~st.departed[p], cand[p] - vlen, np.inf)
    hit = moving & (cand > limit + CONTACT_TOL)
    if hit.any():
        for i in range(int(np.argmax(hit)), cand.size):
            j = st.pred[i]
            if j < 0 or st.departed[j] or st.departed[i]:
                continue
            lim = cand[j] - vlen
            if cand[i] > lim + CONTACT_TOL and not st.crashed[i]:
                cand[i] = lim
                _crash(st, i)
                _crash(st, j)
    st.pos = cand

    active = ~st.departed
    if active.sum() > 1 and len(st.model.lanes) > 1:
        x, y = st.xy()
        dist = np.hypot(x[:, None] - x[None, :], y[:, None] - y[None, :])
        close = (dist < vlen - CONTACT_TOL) & ~st._same_lane
        close &= active[:, None] & active[None, :]
        close &= ~(st.crashed[:, None] & st.crashed[None, :])
        if close.any():
            for i, j in zip(*np.nonzero(np.triu(close))):
                _crash(st, int(i))
                _crash(st, int(j))

    st.departed |= ~st.crashed & (st.pos > st.lengths[st.lane_id])
    st.speed = np.where(st.crashed, 0.0, speed_at(st.t, st.v_init, st.t_break, decel))
    st.speed[st.departed] = 0.0
    return st


@dataclass
class IntersectionTrace:
    times: np.ndarray
    speed: np.ndarray
    pos: np.ndarray
    x: np.ndarray
    y: np.ndarray
    dist_center: np.ndarray
    headway: np.ndarray
    state: np.ndarray


@dataclass
class IntersectionResult:
    """Final classification of every vehicle plus optional traces.

    ``outcome`` holds one of ``crashed``, ``stopped``, ``departed`` or
    ``running`` (the last only when the step budget ran out).
    """

    lane_id: np.ndarray
    index: np.ndarray
    outcome: list[str]
    final_pos: np.ndarray
    brake_times: np.ndarray
    crash_times: np.ndarray
    steps: int
    time: float
    quiescent: bool
    transitions: set = field(default_factory=set)
    trace: IntersectionTrace | None = field(default=None, repr=False)

    def count(self, outcome: str) -> int:
        return sum(1 for o in self.outcome if o == outcome)

    @property
    def counts(self) -> dict[str, int]:
        return {k: self.count(k) for k in ("crashed", "stopped", "departed", "running")}

    def lane_counts(self, outcome: str) -> list[int]:
        n_lanes = int(self.lane_id.max()) + 1 if self.lane_id.size else 0
        out = [0] * n_lanes
        for k, o in zip(self.lane_id, self.outcome):
            if o == outcome:
                out[k] += 1
        return out


def _headways(st: ModelState) -> np.ndarray:
    """Gap from each vehicle's rear to its follower's front (NaN if none)."""
    out = np.full(st.pos.size, np.nan)
    has_pred = st.pred >= 0
    followers = np.nonzero(has_pred)[0]
    leaders = st.pred[followers]
    ok = ~st.departed[followers] & ~st.departed[leaders]
    out[leaders[ok]] = st.pos[leaders[ok]] - st.config.vlen - st.pos[followers[ok]]
    return out


def run_model(model: TrafficModel, config: IntersectionConfig = IntersectionConfig()) -> IntersectionResult:
    """Step until every remaining vehicle is at rest or the budget is spent."""
    st = ModelState(model, config)
    cx, cy = model.center
    rows: dict[str, list] = {k: [] for k in ("t", "speed", "pos", "x", "y", "dc", "hw", "state")}
    transitions: set = set()

    def snap():
        x, y = st.xy()
        rows["t"].append(st.t)
        rows["speed"].append(st.speed.copy())
        rows["pos"].append(st.pos.copy())
        rows["x"].append(x)
        rows["y"].append(y)
        rows["dc"].append(np.hypot(x - cx, y - cy))
        rows["hw"].append(_headways(st))
        rows["state"].append(st.codes())

    prev = st.codes()
    if config.record_trace:
        snap()
    quiescent = False
    while st.step < config.max_steps:
        step_model(st)
        cur = st.codes()
        changed = (cur != prev) & (cur < 3)
        for a, b in zip(prev[changed], cur[changed]):
            transitions.add((VehicleState(_CODE_NAMES[a]), VehicleState(_CODE_NAMES[b])))
        prev = cur
        if config.record_trace and st.step % config.trace_every == 0:
            snap()
        if not st.speed[~st.departed].any():
            quiescent = True
            break
    if config.record_trace and st.step % config.trace_every != 0:
        snap()

    outcome = []
    for i in range(st.pos.size):
        if st.crashed[i]:
            outcome.append("crashed")
        elif st.departed[i]:
            outcome.append("departed")
        elif st.speed[i] == 0:
            outcome.append("stopped")
        else:
            outcome.append("running")
    trace = None
    if config.record_trace:
        trace = IntersectionTrace(
            times=np.array(rows["t"]),
            speed=np.vstack(rows["speed"]),
            pos=np.vstack(rows["pos"]),
            x=np.vstack(rows["x"]),
            y=np.vstack(rows["y"]),
            dist_center=np.vstack(rows["dc"]),
            headway=np.vstack(rows["hw"]),
            state=np.vstack(rows["state"]),
        )
    return IntersectionResult(
        lane_id=st.lane_id.copy(),
        index=st.index.copy(),
        outcome=outcome,
        final_pos=st.pos.copy(),
        brake_times=st.t_break.copy(),
        crash_times=st.crash_time.copy(),
        steps=st.step,
        time=st.t,
        quiescent=quiescent,
        transitions=transitions,
        trace=trace,
    )


STATE_CODE_NAMES = _CODE_NAMES
