"""Experiment configuration: strict JSON parsing, validation and hashing."""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

from ..numerics import DomainError
from ..overload_sim import AgentConfig, FeatureCode, StreamConfig, TrackConfig, Variant
from ..tpn import MentalState, RegimeParams

OUTPUT_ENV = "ACTIVEPRECISION_OUTPUT_DIR"
DEFAULT_OUTPUT = "runs"


class ConfigError(Exception):
    """Base class; ``key`` names the offending entry when there is one."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class ConfigNotFoundError(ConfigError, FileNotFoundError):
    pass


class ConfigSyntaxError(ConfigError):
    pass


class ConfigValueError(ConfigError, ValueError):
    pass


class UnknownKeyError(ConfigValueError):
    def __init__(self, keys: list[str]):
        super().__init__(f"unknown config key(s): {', '.join(keys)}", keys[0])
        self.keys = keys


def _num(lo=None, hi=None, lo_open=False, hi_open=False, integer=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            return "must be a number"
        if integer and int(v) != v:
            return "must be an integer"
        if lo is not None and (v <= lo if lo_open else v < lo):
            return f"must be {'>' if lo_open else '>='} {lo}"
        if hi is not None and (v >= hi if hi_open else v > hi):
            return f"must be {'<' if hi_open else '<='} {hi}"
        return None

    return check


def _pair(lo_open_zero=True):
    def check(v):
        if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
            return "must be a [low, high] pair of numbers"
        if not 0 < v[0] <= v[1]:
            return "must satisfy 0 < low <= high"
        return None

    return check


def _num_list(positive=False):
    def check(v):
        if not (isinstance(v, list) and v and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
            return "must be a non-empty list of numbers"
        if positive and any(x <= 0 for x in v):
            return "entries must be positive"
        return None

    return check


TRACK_SCHEMA = {
    "horizon": _num(0, integer=True),
    "half_width": _num(0, lo_open=True),
    "amplitudes": _num_list(),
    "periods": _num_list(positive=True),
    "track_seed": _num(0, 2**64, hi_open=True, integer=True),
}
CODE_SCHEMA = {
    "span": _num(0, lo_open=True),
    "n_centers": _num(2, integer=True),
    "width": _num(0, lo_open=True),
}
STREAM_SCHEMA = {
    "rho": _num(0, 1, lo_open=True),
    "obs_noise": _num(0),
    "distractor_scale": _num(0),
    "distractor_spread": _num(0, 1),
    "distractor_periods": _pair(),
    "code": CODE_SCHEMA,
}
AGENT_SCHEMA = {
    "controller_gain": _num(0, lo_open=True),
    "salience_gain": _num(0),
    "pi_min": _num(0, 1, lo_open=True, hi_open=True),
    "retain_threshold": _num(0, 1, lo_open=True),
    "regime": None,  # validated separately
    "interaction_scale": _num(0, lo_open=True),
    "readout_weight": _num(),
    "feedback_lambda": _num(0),
    "belief_rate": _num(0, 1, lo_open=True),
    "trend_rate": _num(0, 1),
}
TOP_SCHEMA = {"grid", "seeds", "track", "stream", "agent", "burn_in", "output_dir", "calibration", "description"}
# keys that do not change results and therefore stay out of the hash
NON_SEMANTIC = {"output_dir", "calibration", "description"}


@dataclass(frozen=True)
class ExperimentConfig:
    grid: tuple[tuple[int, int], ...]
    seeds: tuple[int, ...]
    track: TrackConfig
    stream: dict
    agent: dict
    burn_in: int = 100
    output_dir: Optional[str] = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def stream_config(self, s_r: int) -> StreamConfig:
        params = dict(self.stream)
        code = params.pop("code", None)
        if code is not None:
            params["code"] = FeatureCode(**code)
        if "distractor_periods" in params:
            params["distractor_periods"] = tuple(params["distractor_periods"])
        return StreamConfig(s_r=s_r, **params)

    def agent_config(self, variant, s_c: int) -> AgentConfig:
        params = dict(self.agent)
        if "regime" in params:
            params["regime"] = _regime(params["regime"])
        return AgentConfig(variant=Variant(variant), s_c=s_c, **params)

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)

    def resolve_output_dir(self, override: Optional[str] = None) -> Path:
        if override:
            return Path(override)
        if self.output_dir:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))


def config_hash(raw: dict) -> str:
    semantic = {k: v for k, v in raw.items() if k not in NON_SEMANTIC}
    blob = json.dumps(_normalise(semantic), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _normalise(obj):
    # 1 and 1.0 mean the same setting
    if isinstance(obj, dict):
        return {k: _normalise(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_normalise(v) for v in obj]
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (int, float)):
        return float(obj)
    return obj


def _regime(value) -> RegimeParams:
    if isinstance(value, str):
        return RegimeParams.preset(value)
    return RegimeParams(MentalState(value["state"]), value["r_gain"], value["c_gain"])


def _check_section(section: dict, schema: dict, prefix: str) -> None:
    if not isinstance(section, dict):
        raise ConfigValueError(f"{prefix} must be an object", prefix)
    unknown = sorted(set(section) - set(schema))
    if unknown:
        raise UnknownKeyError([f"{prefix}.{k}" for k in unknown])
    for key, value in section.items():
        check = schema[key]
        name = f"{prefix}.{key}"
        if isinstance(check, dict):
            _check_section(value, check, name)
        elif check is not None:
            problem = check(value)
            if problem:
                raise ConfigValueError(f"{name} {problem} (got {value!r})", name)


def validate(raw: Any) -> ExperimentConfig:
    """Validate an already-decoded JSON object and build the config."""
    if not isinstance(raw, dict):
        raise ConfigValueError("top level must be a JSON object")
    unknown = sorted(set(raw) - TOP_SCHEMA)
    if unknown:
        raise UnknownKeyError(unknown)
    for key in ("grid", "seeds"):
        if key not in raw:
            raise ConfigValueError(f"missing required key {key!r}", key)

    grid = raw["grid"]
    if not isinstance(grid, list) or not grid:
        raise ConfigValueError("grid must be a non-empty list of {s_r, s_c} cells", "grid")
    cells = []
    for i, cell in enumerate(grid):
        name = f"grid[{i}]"
        if not isinstance(cell, dict):
            raise ConfigValueError(f"{name} must be an object with s_r and s_c", name)
        extra = sorted(set(cell) - {"s_r", "s_c"})
        if extra:
            raise UnknownKeyError([f"{name}.{k}" for k in extra])
        for k in ("s_r", "s_c"):
            if k not in cell:
                raise ConfigValueError(f"{name} is missing {k}", f"{name}.{k}")
            problem = _num(1, integer=True)(cell[k])
            if problem:
                raise ConfigValueError(f"{name}.{k} {problem} (got {cell[k]!r})", f"{name}.{k}")
        cells.append((int(cell["s_r"]), int(cell["s_c"])))

    seeds = raw["seeds"]
    if not isinstance(seeds, list) or not seeds:
        raise ConfigValueError("seeds must be a non-empty list of integers", "seeds")
    for s in seeds:
        if _num(0, 2**64, hi_open=True, integer=True)(s):
            raise ConfigValueError(f"seeds entries must be non-negative 64-bit integers (got {s!r})", "seeds")
    if len(set(seeds)) != len(seeds):
        raise ConfigValueError("seeds must be distinct", "seeds")

    track = raw.get("track", {})
    stream = raw.get("stream", {})
    agent = raw.get("agent", {})
    _check_section(track, TRACK_SCHEMA, "track")
    _check_section(stream, STREAM_SCHEMA, "stream")
    _check_section(agent, AGENT_SCHEMA, "agent")
    burn_in = raw.get("burn_in", 100)
    if _num(0, integer=True)(burn_in):
        raise ConfigValueError(f"burn_in must be a non-negative integer (got {burn_in!r})", "burn_in")
    out = raw.get("output_dir")
    if out is not None and not isinstance(out, str):
        raise ConfigValueError("output_dir must be a string", "output_dir")
    if "calibration" in raw and not isinstance(raw["calibration"], dict):
        raise ConfigValueError("calibration must be an object", "calibration")

    try:
        track_cfg = TrackConfig(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in track.items()})
    except DomainError as exc:
        raise ConfigValueError(f"track: {exc}", "track") from exc
    if "regime" in agent:
        try:
            reg = agent["regime"]
            if isinstance(reg, dict):
                extra = sorted(set(reg) - {"state", "r_gain", "c_gain"})
                if extra:
                    raise UnknownKeyError([f"agent.regime.{k}" for k in extra])
            _regime(reg)
        except (DomainError, KeyError, ValueError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigValueError(f"agent.regime: {exc}", "agent.regime") from exc

    cfg = ExperimentConfig(
        grid=tuple(cells),
        seeds=tuple(int(s) for s in seeds),
        track=track_cfg,
        stream=copy.deepcopy(stream),
        agent=copy.deepcopy(agent),
        burn_in=int(burn_in),
        output_dir=out,
        raw=copy.deepcopy(raw),
    )
    # cross-field checks, cell by cell
    for i, (s_r, s_c) in enumerate(cells):
        try:
            cfg.stream_config(s_r)
        except DomainError as exc:
            key = "stream.rho" if "relevant" in str(exc) else "stream"
            raise ConfigValueError(f"grid[{i}] (s_r={s_r}): {exc}", key) from exc
        try:
            cfg.agent_config(Variant.CO4, s_c)
        except DomainError as exc:
            raise ConfigValueError(f"agent: {exc}", "agent") from exc
    return cfg


def parse_config(path) -> ExperimentConfig:
    """Read and validate a JSON experiment config.

    Raises:
        ConfigNotFoundError: the file does not exist.
        ConfigSyntaxError: the file is not valid JSON.
        ConfigValueError: a value is missing, unknown or out of range; ``key``
            names it.
    """
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigNotFoundError(f"config file not found: {p}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(f"{p}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return validate(raw)


def default_config_path() -> Path:
    return Path(str(resources.files("activeprecision") / "data" / "default_config.json"))


def load_default() -> ExperimentConfig:
    return parse_config(default_config_path())
