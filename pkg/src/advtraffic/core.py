"""Shared constants and parameter types.

All stored values are SI.  Speeds given in km/h must be converted at the
boundary with :func:`kmh_to_ms`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

G_DEFAULT = 9.8
MU_DEFAULT = 0.7
REACT_TIME_DEFAULT = 1.5
VLEN_DEFAULT = 5.0
VIS_DIST_DEFAULT = 100.0

KMH_PER_MS = 3.6


class ParameterError(ValueError):
    """A parameter violates the invariants of its type."""


class InfeasibleError(ValueError):
    """A scenario cannot be realised under its own constraints."""


class StepLimitError(RuntimeError):
    """A simulation exhausted its step budget before reaching quiescence."""


def kmh_to_ms(v: float) -> float:
    return v * (1000.0 / 3600.0)


def ms_to_kmh(v: float) -> float:
    return v * KMH_PER_MS


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ParameterError(msg)


def _finite(name: str, value: float) -> None:
    _require(isinstance(value, (int, float)) and math.isfinite(value),
             f"{name} must be a finite number, got {value!r}")


@dataclass(frozen=True)
class PhysConstants:
    """Gravitational acceleration ``g`` (m/s^2) and kinetic friction ``mu``."""

    g: float = G_DEFAULT
    mu: float = MU_DEFAULT

    def __post_init__(self):
        _finite("g", self.g)
        _finite("mu", self.mu)
        _require(self.g > 0, f"g must be > 0, got {self.g}")
        _require(0 < self.mu <= 1.5, f"mu must be in (0, 1.5], got {self.mu}")

    @property
    def decel(self) -> float:
        """Full-braking deceleration mu*g (m/s^2)."""
        return self.mu * self.g


@dataclass(frozen=True)
class DriverParams:
    react_time: float = REACT_TIME_DEFAULT

    def __post_init__(self):
        _finite("react_time", self.react_time)
        _require(self.react_time >= 0, f"react_time must be >= 0, got {self.react_time}")


@dataclass(frozen=True)
class AdversaryParams:
    """Adversarial manipulation of one vehicle class.

    Attributes:
        speed_gain: additive true-speed increase (m/s). Negative values slow
            the vehicle down.
        react_delay: delay added to every driver reaction (s), e.g. late
            taillights or a late traffic light.
        rate: speed manipulation as a fraction of nominal speed.
    """

    speed_gain: float = 0.0
    react_delay: float = 0.0
    rate: float = 0.0

    def __post_init__(self):
        for name in ("speed_gain", "react_delay", "rate"):
            _finite(name, getattr(self, name))
        _require(self.react_delay >= 0, f"react_delay must be >= 0, got {self.react_delay}")
        _require(self.rate >= 0, f"rate must be >= 0, got {self.rate}")

    @classmethod
    def from_ratio(cls, v: float, rate: float, react_delay: float = 0.0) -> "AdversaryParams":
        """Speed gain expressed as ``rate * v``."""
        return cls(speed_gain=rate * v, react_delay=react_delay, rate=rate)


@dataclass(frozen=True)
class FormationParams:
    """A single-file formation of identical vehicles.

    ``headway`` is the bumper-to-bumper gap ``b``; consecutive front bumpers
    are ``headway + vlen`` apart.
    """

    n_vehicles: int
    v_init: float
    headway: float
    vlen: float = VLEN_DEFAULT
    vis_dist: float = VIS_DIST_DEFAULT

    def __post_init__(self):
        _require(isinstance(self.n_vehicles, int) and not isinstance(self.n_vehicles, bool),
                 f"n_vehicles must be an int, got {self.n_vehicles!r}")
        _require(self.n_vehicles >= 1, f"n_vehicles must be >= 1, got {self.n_vehicles}")
        for name in ("v_init", "headway", "vlen", "vis_dist"):
            value = getattr(self, name)
            _finite(name, value)
            _require(value > 0, f"{name} must be > 0, got {value}")

    @property
    def spacing(self) -> float:
        """Front-to-front distance between consecutive vehicles."""
        return self.headway + self.vlen


def two_second_headway(v: float, seconds: float = 2.0) -> float:
    """Distance covered in ``seconds`` at speed ``v`` (the 2-second rule)."""
    return seconds * v
