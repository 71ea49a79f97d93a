"""Chain-collision and adversarial platoon models for vehicle formations."""

__version__ = "0.1.0"

from .analytic import (
    BoundKind,
    CollisionBound,
    SafetyHeadway,
    braking_distance,
    inf_collision_reaction_delay,
    inf_collision_speed_gain,
    irc_speed_gain,
    max_collisions,
    reaction_distance,
    safe_headway,
    safe_headway_ratio_kmh,
)
from .core import (
    AdversaryParams,
    DriverParams,
    FormationParams,
    InfeasibleError,
    ParameterError,
    PhysConstants,
    StepLimitError,
    kmh_to_ms,
    ms_to_kmh,
)
from .lane import LaneSimConfig, LaneSimResult, run_lane

__all__ = [
    "AdversaryParams",
    "BoundKind",
    "CollisionBound",
    "DriverParams",
    "FormationParams",
    "InfeasibleError",
    "LaneSimConfig",
    "LaneSimResult",
    "ParameterError",
    "PhysConstants",
    "SafetyHeadway",
    "StepLimitError",
    "braking_distance",
    "inf_collision_reaction_delay",
    "inf_collision_speed_gain",
    "irc_speed_gain",
    "kmh_to_ms",
    "max_collisions",
    "ms_to_kmh",
    "reaction_distance",
    "run_lane",
    "safe_headway",
    "safe_headway_ratio_kmh",
    "__version__",
]
