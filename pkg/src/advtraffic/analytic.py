"""Closed-form chain-collision metrics.

Braking distance, the upper bound on the number of vehicles involved in a
chain collision, the two adversary impact metrics (the infinite-collision
reaction delay and the instant-reaction-collision speed gain) and the safe
time-headway rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .core import (
    REACT_TIME_DEFAULT,
    AdversaryParams,
    DriverParams,
    ParameterError,
    PhysConstants,
)

# Speed coefficient of the km/h safe-headway rule, rounded as in the common
# "1 second per 25 km/h" formulation.
RATIO_RULE_COEF = 0.019
# Same coefficient before that rounding: 1/(2*mu*g) taken as 0.07 s^2/m, per km/h.
ROUNDED_SI_COEF = 0.07 / 3.6

# Relative tolerance under which v_adv * delta_adv is treated as equal to b.
_EQUALITY_RTOL = 1e-12


def braking_distance(v: float, c: PhysConstants = PhysConstants()) -> float:
    if v < 0:
        raise ParameterError(f"speed must be >= 0, got {v}")
    return v * v / (2.0 * c.decel)


def reaction_distance(v: float, delta: float) -> float:
    if v < 0 or delta < 0:
        raise ParameterError(f"speed and reaction time must be >= 0, got v={v}, delta={delta}")
    return v * delta


def apply_adversary(v: float, delta: float, adv: AdversaryParams) -> tuple[float, float]:
    """Return the manipulated ``(speed, reaction time)`` pair."""
    v_adv = v + adv.speed_gain
    if v_adv < 0:
        raise ParameterError(f"manipulated speed v + speed_gain = {v_adv} is negative")
    return v_adv, delta + adv.react_delay


class BoundKind(str, Enum):
    FINITE = "finite"
    INFINITE = "infinite"
    IMMEDIATE = "immediate"


@dataclass(frozen=True)
class CollisionBound:
    """Upper bound on the number of vehicles involved in a chain collision.

    ``raw`` is the real-valued bound (``inf`` when unbounded); ``count`` is
    its floor for the finite case and ``None`` otherwise.  ``IMMEDIATE``
    marks a headway shorter than the reaction distance; ``INFINITE`` marks
    the exact limit where the two are equal.
    """

    kind: BoundKind
    raw: float
    count: int | None = None

    @property
    def unbounded(self) -> bool:
        return self.kind is not BoundKind.FINITE

    def as_number(self) -> float:
        """Integer count, or ``inf`` when unbounded (for ordering and sweeps)."""
        return math.inf if self.unbounded else float(self.count)

    def __str__(self):
        return str(self.count) if self.kind is BoundKind.FINITE else self.kind.value


def max_collisions(
    v: float,
    b: float,
    delta: float = REACT_TIME_DEFAULT,
    adv: AdversaryParams = AdversaryParams(),
    c: PhysConstants = PhysConstants(),
) -> CollisionBound:
    """Bound on the number of colliding vehicles at speed ``v`` and headway ``b``.

    The lambda-th follower collides when ``lambda*b < d + lambda*v*delta``, so
    ``lambda < d / (b - v*delta)`` with ``d`` the braking distance.  Speed and
    reaction time are taken after adversarial manipulation.
    """
    if v <= 0 or b <= 0:
        raise ParameterError(f"v and b must be > 0, got v={v}, b={b}")
    v_adv, delta_adv = apply_adversary(v, delta, adv)
    reach = v_adv * delta_adv
    if math.isclose(reach, b, rel_tol=_EQUALITY_RTOL, abs_tol=0.0):
        return CollisionBound(BoundKind.INFINITE, math.inf)
    if reach > b:
        return CollisionBound(BoundKind.IMMEDIATE, math.inf)
    raw = braking_distance(v_adv, c) / (b - reach)
    return CollisionBound(BoundKind.FINITE, raw, math.floor(raw))


def inf_collision_reaction_delay(theta: float, v: float, b: float,
                                 delta: float = REACT_TIME_DEFAULT) -> float:
    """Added reaction delay ``epsilon`` at which ``(v+theta)(delta+epsilon) = b``.

    A negative result means the headway is already exhausted without any
    added delay.
    """
    if v + theta <= 0:
        raise ParameterError(f"v + theta must be > 0, got {v + theta}")
    return b / (v + theta) - delta


def inf_collision_speed_gain(eps: float, v: float, b: float,
                             delta: float = REACT_TIME_DEFAULT) -> float:
    """Speed gain ``theta`` on the same locus, for a given added delay."""
    if delta + eps <= 0:
        raise ParameterError("total reaction time must be > 0")
    return b / (delta + eps) - v


def irc_speed_gain(v: float, c: PhysConstants = PhysConstants()) -> float:
    """Speed gain at which the braking distance equals a 2-second headway.

    Beyond it a driver cannot stop behind an instantly stopping vehicle even
    with zero reaction time.  Negative values mean the 2-second headway is
    already shorter than the braking distance at ``v``.
    """
    if v <= 0:
        raise ParameterError(f"v must be > 0, got {v}")
    return 2.0 * math.sqrt(v * c.decel) - v


@dataclass(frozen=True)
class SafetyHeadway:
    """Smallest safe time headway (s); any larger headway is safe."""

    seconds: float

    def __post_init__(self):
        if not self.seconds > 0:
            raise ParameterError(f"safety headway must be > 0, got {self.seconds}")

    def distance(self, v: float) -> float:
        return self.seconds * v


def safe_headway(
    v: float,
    adv: AdversaryParams = AdversaryParams(),
    driver: DriverParams = DriverParams(),
    c: PhysConstants = PhysConstants(),
) -> SafetyHeadway:
    """Time headway ``l`` at which ``l*v`` equals reaction plus braking distance.

    ``l = (delta + eps)(1 + theta/v) + (v + theta)^2 / (2 mu g v)``. The
    returned value is the boundary itself; callers wanting a margin add it.
    """
    if v <= 0:
        raise ParameterError(f"v must be > 0, got {v}")
    v_adv, delta_adv = apply_adversary(v, driver.react_time, adv)
    seconds = delta_adv * (1.0 + adv.speed_gain / v) + v_adv * v_adv / (2.0 * c.decel * v)
    return SafetyHeadway(seconds)


def ratio_rule_coefficient(c: PhysConstants = PhysConstants()) -> float:
    """Unrounded speed coefficient of :func:`safe_headway_ratio_kmh` (s per km/h)."""
    return 1.0 / (2.0 * c.decel) / 3.6


def safe_headway_ratio_kmh(
    v_kmh: float,
    rho: float,
    eps: float = 0.0,
    coef: float = RATIO_RULE_COEF,
    react_time: float = REACT_TIME_DEFAULT,
) -> SafetyHeadway:
    """Safe headway with the speed gain given as a ratio of reported speed in km/h.

    ``l = (react_time + eps)(1 + rho) + coef * (1 + rho)^2 * v_kmh``.  With
    the default rounded ``coef`` and ``rho = 0.5`` this is the
    "2 seconds plus 1 second per 25 km/h" rule; pass
    :func:`ratio_rule_coefficient` for the unrounded form.
    """
    if v_kmh <= 0:
        raise ParameterError(f"v_kmh must be > 0, got {v_kmh}")
    if rho < 0 or eps < 0:
        raise ParameterError(f"rho and eps must be >= 0, got rho={rho}, eps={eps}")
    return SafetyHeadway((react_time + eps) * (1.0 + rho) + coef * (1.0 + rho) ** 2 * v_kmh)
