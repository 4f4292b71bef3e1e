"""JSON configuration documents for missions and batches.

Layout::

    {
      "agent":   {dt, drag, mass, dim, v_max, u_max},
      "hazard":  {p_birth, p_survive, mean_speed, ..., history, history_k},
      "rrt":     {step_size, max_iterations, goal_bias, collision_check_resolution},
      "lqr":     {q_weight, r_weight, riccati_tolerance, riccati_max_iter},
      "mpc":     {horizon, kappa_goal, kappa_smooth, big_m, strict_margin, goal_centroid},
      "weights": {w1a, ..., w3d},
      "mission": {q_matrix, h_matrix, goal_center, goal_size, start, max_steps, d_safe, ...},
      "batch":   {runs, seed, modes, workers, randomize: {start_lo, start_hi, goal_lo, goal_hi, enabled}}
    }

Every key is optional; missing keys take the defaults of the dataclasses.
Units are SI (m, s, kg, N, rad).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

from .agent import AgentParams
from .attention import AttentionWeights
from .fast_planner import LqrConfig, RrtConfig
from .hazard import HazardParams
from .mission import MissionConfig
from .montecarlo import BatchConfig, Randomization
from .mpc import MpcConfig


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "agent": AgentParams,
    "hazard": HazardParams,
    "rrt": RrtConfig,
    "lqr": LqrConfig,
    "mpc": MpcConfig,
    "weights": AttentionWeights,
}
_NESTED = set(_SECTIONS)


@dataclass(frozen=True)
class ConfigDocument:
    mission: MissionConfig = field(default_factory=MissionConfig)
    batch: BatchConfig = field(default_factory=BatchConfig)


def _tupleize(v):
    if isinstance(v, list):
        return tuple(_tupleize(x) for x in v)
    return v


def _listify(v):
    if isinstance(v, tuple):
        return [_listify(x) for x in v]
    return v


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_type(path: str, default, value, annotation: str):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
        want = "boolean"
    elif isinstance(default, int) and "float" not in annotation:
        ok = isinstance(value, int) and not isinstance(value, bool)
        want = "integer"
    elif _is_number(default):
        ok = _is_number(value) or ("tuple" in annotation and isinstance(value, list))
        want = "number"
    elif isinstance(default, str):
        ok = isinstance(value, str)
        want = "string"
    elif isinstance(default, tuple) or default is None:
        ok = isinstance(value, list) or value is None
        want = "list"
    else:
        ok, want = True, ""
    if not ok:
        raise ConfigError(f"{path}: expected {want}, got {type(value).__name__}")


def _build(cls, data: dict, path: str, skip=()):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    known = {f.name: f for f in fields(cls) if f.name not in skip}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown key {path}.{key}" if path else f"unknown key {key}")
    proto = cls()
    kwargs = {}
    for key, value in data.items():
        default = getattr(proto, key)
        _check_type(f"{path}.{key}", default, value, str(known[key].type))
        kwargs[key] = _tupleize(value)
    try:
        return replace(proto, **kwargs)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{path}: {e}") from None


def parse_config(text: str) -> ConfigDocument:
    """Parse a JSON document, apply defaults, validate."""
    if not text.strip():
        data = {}
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"syntax error at line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    allowed = set(_SECTIONS) | {"mission", "batch"}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown key {key}")
    parts = {name: _build(cls, data.get(name, {}), name) for name, cls in _SECTIONS.items()}
    mission_data = data.get("mission", {})
    mission = _build(MissionConfig, mission_data, "mission", skip=_NESTED)
    try:
        mission = replace(mission, **parts)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"mission: {e}") from None
    batch_data = data.get("batch", {})
    if not isinstance(batch_data, dict):
        raise ConfigError("batch: expected an object")
    batch_data = dict(batch_data)
    rand = _build(Randomization, batch_data.pop("randomize", {}), "batch.randomize")
    batch = _build(BatchConfig, batch_data, "batch", skip=("base", "randomize"))
    try:
        batch = replace(batch, base=mission, randomize=rand)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"batch: {e}") from None
    return ConfigDocument(mission, batch)


def _section_dict(obj, skip=()) -> dict:
    return {f.name: _listify(getattr(obj, f.name)) for f in fields(obj) if f.name not in skip}


def to_dict(doc: ConfigDocument) -> dict:
    m = doc.mission
    out = {name: _section_dict(getattr(m, name)) for name in _SECTIONS}
    out["mission"] = _section_dict(m, skip=_NESTED)
    batch = _section_dict(doc.batch, skip=("base", "randomize"))
    batch["randomize"] = _section_dict(doc.batch.randomize)
    out["batch"] = batch
    return out


def serialize(doc: ConfigDocument) -> str:
    return json.dumps(to_dict(doc), indent=2, sort_keys=True) + "\n"


def load(path) -> ConfigDocument:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return parse_config(text)


def mission_from_dict(data: dict) -> MissionConfig:
    """Rebuild a mission config from ``to_dict`` output (log headers)."""
    return parse_config(json.dumps(data)).mission


__all__ = [
    "ConfigDocument", "ConfigError", "parse_config", "serialize", "to_dict", "load",
    "mission_from_dict",
]
