"""Scenario configuration: YAML in, SI out.

Dimensional values are strings with a unit tag (``"20 kmh"``, ``"200 ms"``,
``"11 m"``).  Speeds must carry a tag; other quantities may be bare numbers,
read as SI.  Unknown keys are rejected.  See ``README.md`` for the schema.
"""

from __future__ import annotations

import copy
import itertools
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from .core import (
    G_DEFAULT,
    MU_DEFAULT,
    REACT_TIME_DEFAULT,
    VIS_DIST_DEFAULT,
    VLEN_DEFAULT,
    AdversaryParams,
    DriverParams,
    FormationParams,
    ParameterError,
    PhysConstants,
    kmh_to_ms,
)

KINDS = ("analyze", "lane", "intersection", "platoon", "sweep")


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


_UNITS = {
    "speed": {"m/s": 1.0, "mps": 1.0, "kmh": None, "km/h": None},
    "time": {"s": 1.0, "ms": 1e-3, "min": 60.0, "h": 3600.0},
    "length": {"m": 1.0, "km": 1000.0},
    "accel": {"m/s2": 1.0, "m/s^2": 1.0},
    "rate": {"1/s": 1.0, "/s": 1.0},
}
# Unit used when emitting SI values.
_SI_TAG = {"speed": "m/s", "time": "s", "length": "m", "accel": "m/s2", "rate": "1/s"}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


@dataclass(frozen=True)
class Headway:
    """Headway given either as a distance (``m``) or a time (``s``)."""

    value: float
    unit: str

    def distance(self, v: float) -> float:
        return self.value * v if self.unit == "s" else self.value

    def __str__(self):
        return f"{self.value!r} {self.unit}"


@dataclass(frozen=True)
class Field:
    kind: str
    default: Any = None
    choices: tuple = ()
    nullable: bool = False


_REQUIRED = object()

SCHEMA: dict[str, Any] = {
    "kind": Field("choice", _REQUIRED, KINDS),
    "seed": Field("int", None, nullable=True),
    "dt": Field("time", 0.01),
    "physics": {"g": Field("accel", G_DEFAULT), "mu": Field("float", MU_DEFAULT)},
    "driver": {"react_time": Field("time", REACT_TIME_DEFAULT)},
    "adversary": {
        "speed_gain": Field("speed", 0.0),
        "react_delay": Field("time", 0.0),
        "rate": Field("float", 0.0),
    },
    "formation": {
        "n_vehicles": Field("int", None, nullable=True),
        "speed": Field("speed", None, nullable=True),
        "headway": Field("headway", Headway(2.0, "s")),
        "vlen": Field("length", VLEN_DEFAULT),
        "vis_dist": Field("length", VIS_DIST_DEFAULT),
    },
    "lane": {
        "obstacle_pos": Field("length", None, nullable=True),
        "light_delay": Field("time", 0.0),
        "max_steps": Field("int", 1_000_000),
        "trace": Field("bool", True),
    },
    "intersection": {
        "layout": Field("choice", "crossroad6", ("crossroad6",)),
        "max_steps": Field("int", 1_000_000),
        "trace_every": Field("int", 10),
    },
    "platoon": {
        "alpha": Field("rate", 1.5),
        "p_adv": Field("float", 0.03),
        "rho": Field("float", 0.25),
        "horizon": Field("time", 3600.0),
        "sigma": Field("float", 10.0),
        "mode": Field("choice", "tail", ("tail", "split")),
        "trace_every": Field("int", 100),
        "k_max": Field("int", None, nullable=True),
    },
    "sweep": {
        "metric": Field("choice", "max_collisions", ("max_collisions", "lane_collisions", "safe_headway")),
        "axes": Field("axes", ()),
    },
}

# Per-kind defaults filled in when the formation leaves them open.
KIND_DEFAULTS = {
    "analyze": {"speed": kmh_to_ms(130.0), "n_vehicles": 60},
    "lane": {"speed": kmh_to_ms(20.0), "n_vehicles": 60},
    "intersection": {"speed": kmh_to_ms(30.0), "n_vehicles": 10},
    "platoon": {"speed": kmh_to_ms(130.0), "n_vehicles": 20},
    "sweep": {"speed": kmh_to_ms(130.0), "n_vehicles": 60},
}

SWEEPABLE_KINDS = ("speed", "time", "length", "accel", "rate", "float", "int", "headway")


@dataclass(frozen=True)
class SweepAxis:
    param: str
    min: Any
    max: Any
    steps: int

    def values(self) -> list:
        if self.steps == 1:
            return [self.min]
        if isinstance(self.min, Headway):
            grid = np.linspace(self.min.value, self.max.value, self.steps)
            return [Headway(float(x), self.min.unit) for x in grid]
        if isinstance(self.min, int):
            return sorted({int(round(x)) for x in np.linspace(self.min, self.max, self.steps)})
        return [float(x) for x in np.linspace(self.min, self.max, self.steps)]


def _parse_quantity(value, kind: str, where: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a {kind}, got a boolean")
    if isinstance(value, (int, float)):
        if kind == "speed":
            raise ConfigError(f"{where}: speed needs a unit tag (kmh, km/h or m/s)")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a {kind}, got {value!r}")
    m = _QUANTITY.match(value)
    if not m:
        raise ConfigError(f"{where}: cannot parse {value!r}")
    number, unit = float(m.group(1)), m.group(2)
    if not unit:
        if kind == "speed":
            raise ConfigError(f"{where}: speed needs a unit tag (kmh, km/h or m/s)")
        return number
    units = _UNITS[kind]
    if unit not in units:
        raise ConfigError(f"{where}: unit {unit!r} is not a {kind} unit ({', '.join(units)})")
    if kind == "speed" and units[unit] is None:
        return kmh_to_ms(number)
    return number * units[unit]


def _parse_headway(value, where: str) -> Headway:
    if isinstance(value, str):
        m = _QUANTITY.match(value)
        if m and m.group(2) in ("s", "ms"):
            return Headway(_parse_quantity(value, "time", where), "s")
    return Headway(_parse_quantity(value, "length", where), "m")


def _parse_value(value, f: Field, where: str):
    if value is None:
        if f.nullable:
            return None
        raise ConfigError(f"{where}: value required")
    if f.kind == "choice":
        if value not in f.choices:
            raise ConfigError(f"{where}: {value!r} not one of {', '.join(f.choices)}")
        return value
    if f.kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if f.kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if f.kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if f.kind == "headway":
        return _parse_headway(value, where)
    if f.kind == "axes":
        return tuple(_parse_axes(value, where))
    return _parse_quantity(value, f.kind, where)


def _field_for(param: str) -> Field:
    node: Any = SCHEMA
    for part in param.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"sweep axis: unknown parameter {param!r}")
        node = node[part]
    if not isinstance(node, Field) or node.kind not in SWEEPABLE_KINDS:
        raise ConfigError(f"sweep axis: parameter {param!r} is not numeric")
    return node


def _parse_axes(value, where: str):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{where}: expected a list of axes")
    axes = []
    for n, item in enumerate(value):
        here = f"{where}[{n}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{here}: expected a mapping")
        unknown = set(item) - {"param", "min", "max", "steps"}
        if unknown:
            raise ConfigError(f"{here}: unknown key {sorted(unknown)[0]!r}")
        for key in ("param", "min", "max", "steps"):
            if key not in item:
                raise ConfigError(f"{here}: missing key {key!r}")
        param = item["param"]
        f = _field_for(param)
        lo = _parse_value(item["min"], f, f"{here}.min")
        hi = _parse_value(item["max"], f, f"{here}.max")
        if isinstance(lo, Headway) and lo.unit != hi.unit:
            raise ConfigError(f"{here}: min and max headways use different units")
        steps = item["steps"]
        if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
            raise ConfigError(f"{here}.steps: expected an integer >= 1, got {steps!r}")
        axes.append(SweepAxis(param, lo, hi, steps))
    return axes


def _resolve(raw: dict, schema: dict, prefix: str) -> dict:
    unknown = set(raw) - set(schema)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {prefix + key!r}")
    out = {}
    for key, entry in schema.items():
        where = prefix + key
        if isinstance(entry, dict):
            sub = raw.get(key, {})
            if sub is None:
                sub = {}
            if not isinstance(sub, dict):
                raise ConfigError(f"{where}: expected a mapping")
            out[key] = _resolve(sub, entry, where + ".")
        elif key in raw:
            out[key] = _parse_value(raw[key], entry, where)
        elif entry.default is _REQUIRED:
            raise ConfigError(f"missing key {where!r}")
        else:
            out[key] = entry.default
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario with every default materialised and values in SI."""

    kind: str
    data: dict = field(compare=True)

    def get(self, dotted: str):
        node = self.data
        for part in dotted.split("."):
            node = node[part]
        return node

    def with_value(self, dotted: str, value) -> "ScenarioConfig":
        data = copy.deepcopy(self.data)
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]] = value
        return ScenarioConfig(self.kind, data)

    def with_kind(self, kind: str) -> "ScenarioConfig":
        data = copy.deepcopy(self.data)
        data["kind"] = kind
        return ScenarioConfig(kind, _fill_kind_defaults(data, kind))

    # Builders for the engine parameter types.
    def phys(self) -> PhysConstants:
        return PhysConstants(self.get("physics.g"), self.get("physics.mu"))

    def driver(self) -> DriverParams:
        return DriverParams(self.get("driver.react_time"))

    def adversary(self) -> AdversaryParams:
        a = self.data["adversary"]
        return AdversaryParams(a["speed_gain"], a["react_delay"], a["rate"])

    @property
    def speed(self) -> float:
        return self.get("formation.speed")

    @property
    def headway_m(self) -> float:
        return self.get("formation.headway").distance(self.speed)

    def formation(self) -> FormationParams:
        f = self.data["formation"]
        return FormationParams(f["n_vehicles"], f["speed"], self.headway_m, f["vlen"], f["vis_dist"])

    def sweep_rows(self):
        """Child configs in lexicographic axis order, with their axis values."""
        axes = self.get("sweep.axes")
        grids = [a.values() for a in axes]
        for combo in itertools.product(*grids):
            child = self
            for axis, value in zip(axes, combo):
                child = child.with_value(axis.param, value)
            yield combo, child

    def to_dict(self) -> dict:
        """JSON-ready echo in SI units."""
        out = _jsonable(self.data)
        out["formation"]["headway_m"] = self.headway_m
        return out


def _fill_kind_defaults(data: dict, kind: str) -> dict:
    form = data["formation"]
    for key, value in KIND_DEFAULTS[kind].items():
        if form[key] is None:
            form[key] = value
    return data


def _jsonable(node):
    if isinstance(node, dict):
        return {k: _jsonable(v) for k, v in node.items()}
    if isinstance(node, (list, tuple)):
        return [_jsonable(v) for v in node]
    if isinstance(node, Headway):
        return {"value": node.value, "unit": node.unit}
    if isinstance(node, SweepAxis):
        return {"param": node.param, "min": _jsonable(node.min), "max": _jsonable(node.max),
                "steps": node.steps}
    return node


def _validate(cfg: ScenarioConfig) -> None:
    try:
        cfg.phys()
        cfg.driver()
        cfg.adversary()
        cfg.formation()
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    if not cfg.get("dt") > 0:
        raise ConfigError("dt must be > 0")
    if cfg.kind == "sweep" and not cfg.get("sweep.axes"):
        raise ConfigError("sweep needs at least one axis")
    for key in ("lane.max_steps", "intersection.max_steps", "intersection.trace_every",
                "platoon.trace_every"):
        if cfg.get(key) < 1:
            raise ConfigError(f"{key} must be >= 1")


def parse_config(text: str, kind: str | None = None) -> ScenarioConfig:
    """Parse YAML text into a validated :class:`ScenarioConfig`.

    Args:
        kind: supply or check the ``kind`` key (used by CLI subcommands).
    """
    try:
        raw = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping")
    raw = dict(raw)
    if kind is not None:
        if raw.get("kind", kind) != kind:
            raise ConfigError(f"config kind {raw['kind']!r} does not match command {kind!r}")
        raw["kind"] = kind
    data = _resolve(raw, SCHEMA, "")
    data = _fill_kind_defaults(data, data["kind"])
    cfg = ScenarioConfig(data["kind"], data)
    _validate(cfg)
    return cfg


def _emit_value(value, f: Field):
    if value is None:
        return None
    if f.kind in _SI_TAG:
        return f"{value!r} {_SI_TAG[f.kind]}"
    if f.kind == "headway":
        return str(value)
    if f.kind == "axes":
        fld = {a.param: _field_for(a.param) for a in value}
        return [{"param": a.param, "min": _emit_value(a.min, fld[a.param]),
                 "max": _emit_value(a.max, fld[a.param]), "steps": a.steps} for a in value]
    return value


def _emit(node: dict, schema: dict) -> dict:
    out = {}
    for key, entry in schema.items():
        if isinstance(entry, dict):
            out[key] = _emit(node[key], entry)
        else:
            out[key] = _emit_value(node[key], entry)
    return out


def emit_config(cfg: ScenarioConfig) -> str:
    """YAML text that parses back to ``cfg``; values are written in SI."""
    return yaml.safe_dump(_emit(cfg.data, SCHEMA), sort_keys=False)
