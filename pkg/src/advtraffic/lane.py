"""Single-lane formation braking toward an obstacle.

The obstacle (a traffic light that the adversary may delay) sits ahead of the
lead vehicle.  The lead driver reacts ``react_time + react_delay`` after the
light is shown; each follower reacts the same amount after its predecessor's
brake lights come on (or after the predecessor crashes, if that is earlier).
A vehicle whose front reaches the rear of the vehicle ahead, or the obstacle,
is crashed and frozen at the point of contact.

Coordinates are 1-D front-bumper positions increasing toward the obstacle;
the lead starts at 0 and follower ``i`` at ``-i * (headway + vlen)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AdversaryParams, DriverParams, FormationParams, ParameterError, PhysConstants
from .kinematics import CONTACT_TOL, distance_travelled, speed_at

RUNNING, BRAKING, CRASHED = "running", "braking", "crashed"
STATE_NAMES = (RUNNING, BRAKING, CRASHED)


@dataclass(frozen=True)
class LaneSimConfig:
    """Configuration of one single-lane run.

    Attributes:
        obstacle_pos: obstacle coordinate; ``None`` puts it one headway ahead
            of the lead, as if the obstacle were an instantly stopped vehicle.
        light_delay: time (s) at which the obstacle signal is shown.
        max_steps: step budget; a run that exhausts it is not quiescent.
    """

    formation: FormationParams
    driver: DriverParams = DriverParams()
    adv: AdversaryParams = AdversaryParams()
    phys: PhysConstants = PhysConstants()
    dt: float = 0.01
    obstacle_pos: float | None = None
    light_delay: float = 0.0
    max_steps: int = 1_000_000
    record_trace: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        if self.max_steps < 1:
            raise ParameterError(f"max_steps must be > 0, got {self.max_steps}")
        if self.light_delay < 0:
            raise ParameterError(f"light_delay must be >= 0, got {self.light_delay}")
        if self.obstacle_pos is not None and self.obstacle_pos < 0:
            raise ParameterError("obstacle must not be behind the lead vehicle")
        if self.run_speed < 0:
            raise ParameterError("manipulated speed is negative")

    @property
    def obstacle(self) -> float:
        return self.formation.headway if self.obstacle_pos is None else self.obstacle_pos

    @property
    def run_speed(self) -> float:
        """True running speed: nominal speed plus adversarial gain."""
        return self.formation.v_init + self.adv.speed_gain

    @property
    def reaction(self) -> float:
        return self.driver.react_time + self.adv.react_delay


@dataclass
class LaneState:
    step: int
    t: float
    pos0: np.ndarray
    pos: np.ndarray
    speed: np.ndarray
    crashed: np.ndarray
    t_brake: np.ndarray
    crash_time: np.ndarray

    def copy(self) -> "LaneState":
        return LaneState(self.step, self.t, self.pos0, self.pos.copy(), self.speed.copy(),
                         self.crashed.copy(), self.t_brake.copy(), self.crash_time.copy())

    def states(self) -> np.ndarray:
        """Integer state codes indexing :data:`STATE_NAMES`."""
        code = np.where(self.t_brake <= self.t, 1, 0)
        return np.where(self.crashed, 2, code)


def _schedule_brakes(state: LaneState, cfg: LaneSimConfig) -> None:
    reaction = cfg.reaction
    tb = state.t_brake
    tb[0] = min(tb[0], cfg.light_delay + reaction)
    for i in range(1, tb.size):
        stimulus = min(tb[i - 1], state.crash_time[i - 1])
        tb[i] = min(tb[i], stimulus + reaction)


def init_lane(config: LaneSimConfig) -> LaneState:
    f = config.formation
    n = f.n_vehicles
    pos0 = np.arange(n, dtype=float) * -f.spacing + 0.0
    if config.obstacle < 0:
        raise ParameterError("obstacle must not be behind the lead vehicle")
    state = LaneState(
        step=0,
        t=0.0,
        pos0=pos0,
        pos=pos0.copy(),
        speed=np.full(n, config.run_speed),
        crashed=np.zeros(n, dtype=bool),
        t_brake=np.full(n, np.inf),
        crash_time=np.full(n, np.inf),
    )
    _schedule_brakes(state, config)
    return state


def step_lane(state: LaneState, config: LaneSimConfig) -> LaneState:
    """Advance the formation by one time step."""
    new = state.copy()
    new.step = state.step + 1
    new.t = new.step * config.dt
    v0 = config.run_speed
    decel = config.phys.decel
    vlen = config.formation.vlen

    free = ~new.crashed
    cand = np.where(free, new.pos0 + distance_travelled(new.t, v0, new.t_brake, decel), new.pos)
    limit = np.empty_like(cand)
    limit[0] = config.obstacle
    limit[1:] = cand[:-1] - vlen
    hit = free & (cand > limit + CONTACT_TOL)
    if hit.any():
        # Clamping one vehicle moves the limit of the next, so resolve in order.
        for i in range(int(np.argmax(hit)), cand.size):
            lim = config.obstacle if i == 0 else cand[i - 1] - vlen
            if not new.crashed[i] and cand[i] > lim + CONTACT_TOL:
                cand[i] = lim
                new.crashed[i] = True
                new.crash_time[i] = new.t
        _schedule_brakes(new, config)
    new.pos = cand
    new.speed = np.where(new.crashed, 0.0, speed_at(new.t, v0, new.t_brake, decel))
    return new


@dataclass
class LaneTrace:
    times: np.ndarray
    speed: np.ndarray
    pos: np.ndarray
    state: np.ndarray


@dataclass
class LaneSimResult:
    """Outcome of :func:`run_lane`.

    ``final_gaps`` are bumper-to-bumper gaps to the vehicle ahead (to the
    obstacle for the lead); ``final_spacing`` are the corresponding
    front-to-front distances.
    """

    config: LaneSimConfig
    collided_count: int
    crashed: np.ndarray
    stop_positions: np.ndarray
    final_gaps: np.ndarray
    final_spacing: np.ndarray
    brake_times: np.ndarray
    crash_times: np.ndarray
    steps: int
    time: float
    quiescent: bool
    trace: LaneTrace | None = field(default=None, repr=False)


def run_lane(config: LaneSimConfig) -> LaneSimResult:
    """Step until every vehicle is at rest or the step budget is spent."""
    state = init_lane(config)
    record = config.record_trace
    times, speeds, positions, codes = [], [], [], []

    def snap(s: LaneState):
        times.append(s.t)
        speeds.append(s.speed)
        positions.append(s.pos)
        codes.append(s.states())

    if record:
        snap(state)
    quiescent = False
    while state.step < config.max_steps:
        state = step_lane(state, config)
        if record:
            snap(state)
        if not state.speed.any():
            quiescent = True
            break

    pos = state.pos
    vlen = config.formation.vlen
    ahead = np.concatenate(([config.obstacle + vlen], pos[:-1]))
    trace = None
    if record:
        trace = LaneTrace(np.array(times), np.vstack(speeds), np.vstack(positions), np.vstack(codes))
    return LaneSimResult(
        config=config,
        collided_count=int(state.crashed.sum()),
        crashed=state.crashed.copy(),
        stop_positions=pos.copy(),
        final_gaps=ahead - vlen - pos,
        final_spacing=ahead - pos,
        brake_times=state.t_brake.copy(),
        crash_times=state.crash_time.copy(),
        steps=state.step,
        time=state.t,
        quiescent=quiescent,
        trace=trace,
    )
