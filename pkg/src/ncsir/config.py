"""Experiment configuration: JSON schema, validation and named presets.

A config file is a JSON object whose sections mirror the fields of
:class:`ExperimentConfig`.  Every section is optional; missing values are
filled from the baseline preset and unknown keys are rejected.  See
``docs/config.md`` for the full schema.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .adjoint import CostWeights
from .engine import Grid, TimeGrid, baseline_initial_state, gaussian
from .errors import ParseError, UnknownPreset, ValidationError
from .model import ModelParams
from .optimizer import OptimConfig
from .problem import Problem

SCHEMA_VERSION = 1
MODES = ("simulate", "optimize", "sweep")
DEFAULT_SNAPSHOT_TIMES = (1.75, 10.0, 50.0, 150.0)
DEFAULT_SWEEP_ZETAS = (1.0, 0.4, 0.2, 0.1)


@dataclass(frozen=True)
class ModelSpec:
    """Scalar rates plus the Gaussian birth rate and initial data."""

    beta: float = 5.0
    gamma: float = 1.0
    delta: float = 0.001
    xi: float = 1.0
    mu_bar: float = 1.0
    nu_bar: float = 1.0
    alpha_lower: float = 0.1
    diffusion: tuple = (0.1,) * 6
    birth_amplitude: float = 0.1
    birth_width: float = 1.0
    s_peak: float = 1.0
    i_ratio: float = 0.1
    s_star_ratio: float = 0.05
    i_star_ratio: float = 0.05
    initial_width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "diffusion", tuple(float(v) for v in self.diffusion))
        self.params()
        for name in ("birth_amplitude", "s_peak", "i_ratio", "s_star_ratio", "i_star_ratio"):
            if not getattr(self, name) >= 0:
                raise ValidationError(f"model.{name}", f"{name} >= 0")
        for name in ("birth_width", "initial_width"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"model.{name}", f"{name} > 0")

    def params(self, grid: Grid | None = None) -> ModelParams:
        birth = gaussian(grid, self.birth_amplitude, self.birth_width) if grid else 0.0
        try:
            return ModelParams(beta=self.beta, gamma=self.gamma, delta=self.delta, xi=self.xi,
                               mu_bar=self.mu_bar, nu_bar=self.nu_bar,
                               alpha_lower=self.alpha_lower, diffusion=self.diffusion,
                               birth_rate=birth)
        except ValidationError as exc:
            raise ValidationError(f"model.{exc.field}", exc.constraint) from None

    def initial_state(self, grid: Grid):
        return baseline_initial_state(grid, self.s_peak, self.i_ratio, self.s_star_ratio,
                                      self.i_star_ratio, self.initial_width)


@dataclass(frozen=True)
class TimeSpec:
    t_final: float = 200.0
    dt: float = 0.05

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValidationError("time.t_final", "t_final > 0")
        if not self.dt > 0:
            raise ValidationError("time.dt", "dt > 0")
        try:
            self.time_grid()
        except ValueError:
            raise ValidationError("time.dt", "dt divides t_final") from None

    def time_grid(self) -> TimeGrid:
        return TimeGrid.from_dt(self.t_final, self.dt)


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "runs/out"
    snapshot_times: tuple = DEFAULT_SNAPSHOT_TIMES
    normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        if any(not t >= 0 for t in self.snapshot_times):
            raise ValidationError("outputs.snapshot_times", "all times >= 0")


@dataclass(frozen=True)
class SweepSpec:
    """Values of the control weight ``zeta`` visited by the ``sweep`` mode."""

    zeta: tuple = DEFAULT_SWEEP_ZETAS

    def __post_init__(self):
        object.__setattr__(self, "zeta", tuple(float(z) for z in self.zeta))
        if not self.zeta or any(not z >= 0 for z in self.zeta):
            raise ValidationError("sweep.zeta", "non-empty list of values >= 0")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "baseline"
    mode: str = "optimize"
    model: ModelSpec = field(default_factory=ModelSpec)
    weights: CostWeights = field(default_factory=CostWeights)
    grid: Grid = field(default_factory=Grid)
    time: TimeSpec = field(default_factory=TimeSpec)
    optim: OptimConfig = field(default_factory=lambda: OptimConfig(init="uncontrolled"))
    outputs: OutputSpec = field(default_factory=OutputSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError("mode", f"one of {MODES}")
        if self.schema_version != SCHEMA_VERSION:
            raise ValidationError("schema_version", f"== {SCHEMA_VERSION}")

    def problem(self, weights: CostWeights | None = None) -> Problem:
        """Assemble the discretized control problem this config describes."""
        params = self.model.params(self.grid)
        return Problem(params, weights or self.weights, self.grid, self.time.time_grid(),
                       self.model.initial_state(self.grid))

    def to_dict(self) -> dict:
        return _to_jsonable(dataclasses.asdict(self))

    def with_overrides(self, **sections) -> "ExperimentConfig":
        """Shallow per-section override, e.g. ``with_overrides(grid={"nx": 32})``."""
        data = self.to_dict()
        for key, value in sections.items():
            if isinstance(value, dict):
                data[key] = {**data.get(key, {}), **value}
            else:
                data[key] = value
        return from_dict(data)


SECTIONS = {
    "model": ModelSpec,
    "weights": CostWeights,
    "grid": Grid,
    "time": TimeSpec,
    "optim": OptimConfig,
    "outputs": OutputSpec,
    "sweep": SweepSpec,
}


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    return obj


_SCALAR_TYPES = {"float": (int, float), "int": (int,), "bool": (bool,), "str": (str,),
                 "tuple": (list, tuple)}


def _check_type(path, value, annotation):
    name = getattr(annotation, "__name__", str(annotation))
    expected = _SCALAR_TYPES.get(name.split("|")[0].strip())
    if expected is None:
        return
    if isinstance(value, bool) and bool not in expected:
        raise ValidationError(path, f"type {name}")
    if not isinstance(value, expected):
        raise ValidationError(path, f"type {name}")


def _build_section(name, cls, values, base):
    if not isinstance(values, dict):
        raise ValidationError(name, "a JSON object")
    known = {f.name: f for f in fields(cls)}
    for key, value in values.items():
        if key not in known:
            raise ValidationError(f"{name}.{key}", "a known key")
        _check_type(f"{name}.{key}", value, known[key].type)
    try:
        return replace(base, **values)
    except ValidationError as exc:
        path = exc.field if exc.field.startswith(f"{name}.") else f"{name}.{exc.field}"
        raise ValidationError(path, exc.constraint) from None
    except ValueError as exc:
        raise ValidationError(name, str(exc)) from None


def from_dict(data: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Validate ``data`` and merge it over ``base`` (the baseline preset by default)."""
    if not isinstance(data, dict):
        raise ValidationError("<root>", "a JSON object")
    base = base or ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    for key in data:
        if key not in known:
            raise ValidationError(key, "a known key")
    kwargs = {}
    for key, value in data.items():
        if key in SECTIONS:
            kwargs[key] = _build_section(key, SECTIONS[key], value, getattr(base, key))
        else:
            _check_type(key, value, next(f.type for f in fields(ExperimentConfig) if f.name == key))
            kwargs[key] = value
    return replace(base, **kwargs)


def load_config(path) -> ExperimentConfig:
    """Read a JSON config; missing values come from the baseline preset."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return from_dict(data)


def dump_config(cfg: ExperimentConfig, path=None) -> str:
    text = json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


_PRESETS = {
    "baseline": {},
    "uncontrolled": {"mode": "simulate"},
    "zeta_low": {"weights": {"zeta": 0.1}},
    "zeta_high": {"weights": {"zeta": 0.4}},
    "lambda1_high": {"weights": {"lambda1": 30.0}},
    "lambda1_high_zeta_high": {"weights": {"lambda1": 30.0, "zeta": 0.4}},
    "lambda2_high": {"weights": {"lambda2": 0.1}},
}

PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> ExperimentConfig:
    """Named experiment; ``uncontrolled`` simulates with controls at their lower bounds."""
    if name not in _PRESETS:
        raise UnknownPreset(name, PRESET_NAMES)
    return from_dict({"name": name, **_PRESETS[name]})
