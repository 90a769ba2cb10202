"""Experiment configuration: TOML in, frozen dataclasses out.

Unknown keys are rejected and every section is re-validated against the
constraints of the module that consumes it, so mistakes surface with the
dotted path of the offending key before any computation starts.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..errors import ConfigError

EXPERIMENTS = ("ode", "control-ode", "elliptic", "large", "dynbc", "control-pde", "selfsim",
               "check", "sweep")


@dataclass(frozen=True)
class ForcingSpec:
    kind: str = "power"
    p: float = 2.0
    k: float = 0.0
    lam: float = 1.0

    def validate(self):
        if self.kind not in ("power", "exponential"):
            raise ConfigError(f"unknown forcing kind {self.kind!r}", "forcing.kind")
        if not self.lam > 0:
            raise ConfigError("lam must be positive", "forcing.lam")
        if self.kind == "power" and not self.p > 0:
            raise ConfigError("p must be positive", "forcing.p")


@dataclass(frozen=True)
class AbsorptionSpec:
    kind: str = "power"
    m: float = 3.0

    def validate(self):
        if self.kind not in ("power", "exp", "sexp2s", "zero"):
            raise ConfigError(f"unknown absorption kind {self.kind!r}", "absorption.kind")
        if self.kind == "power" and not self.m > 0:
            raise ConfigError("m must be positive", "absorption.m")


@dataclass(frozen=True)
class GeometrySpec:
    R: float = 1.0
    N: int = 3

    def validate(self):
        if not self.R > 0:
            raise ConfigError("R must be positive", "geometry.R")
        if int(self.N) != self.N or self.N < 2:
            raise ConfigError("N must be an integer >= 2", "geometry.N")


@dataclass(frozen=True)
class InitialSpec:
    u0: float = 1.0
    beta: float = 10.0  # Dirichlet value for the elliptic experiment

    def validate(self):
        if not self.u0 >= 0:
            raise ConfigError("u0 must be nonnegative", "initial.u0")
        if not self.beta >= 0:
            raise ConfigError("beta must be nonnegative", "initial.beta")


@dataclass(frozen=True)
class ControlSpec:
    eps: float | None = None  # None: T/8 for the ODE, T/10 for the PDE
    a: float = 1.0
    gamma: float = 0.2
    q: float = 2.0
    knee: float | None = None  # None: the uncontrolled value at T - eps

    def validate(self):
        if self.eps is not None and not self.eps > 0:
            raise ConfigError("eps must be positive", "control.eps")
        if not self.q > 1:
            raise ConfigError("q must exceed 1", "control.q")
        if not 0 < self.gamma < 1.0 / self.q:
            raise ConfigError("gamma must lie in (0, 1/q)", "control.gamma")
        if not self.a >= 0:
            raise ConfigError("a must be nonnegative", "control.a")
        if self.knee is not None and not self.knee > 0:
            raise ConfigError("knee must be positive", "control.knee")


@dataclass(frozen=True)
class NumericsSpec:
    cap: float | None = None  # None: the module default
    rtol: float | None = None  # None: the module default
    horizon: float | None = None
    n_uniform: int = 512
    nu: list = field(default_factory=lambda: [1.1, 1.5, 2.0])
    samples: int = 1000

    def validate(self):
        if self.cap is not None and not self.cap > 1:
            raise ConfigError("cap must exceed 1", "numerics.cap")
        if self.rtol is not None and not 0 < self.rtol < 1e-3:
            raise ConfigError("rtol must lie in (0, 1e-3)", "numerics.rtol")
        if self.horizon is not None and not self.horizon > 0:
            raise ConfigError("horizon must be positive", "numerics.horizon")
        if self.n_uniform < 16:
            raise ConfigError("n_uniform must be at least 16", "numerics.n_uniform")
        if not isinstance(self.nu, list) or not self.nu or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in self.nu):
            raise ConfigError("nu must be a nonempty list of numbers", "numerics.nu")
        if any(not v > 1 for v in self.nu):
            raise ConfigError("every nu must exceed 1", "numerics.nu")
        if self.samples < 1:
            raise ConfigError("samples must be positive", "numerics.samples")


@dataclass(frozen=True)
class SweepSpec:
    experiment: str = "dynbc"
    axes: dict = field(default_factory=dict)

    def validate(self):
        if self.experiment not in EXPERIMENTS or self.experiment in ("sweep", "check"):
            raise ConfigError(f"cannot sweep experiment {self.experiment!r}", "sweep.experiment")
        for key, values in self.axes.items():
            if key.count(".") != 1:
                raise ConfigError("axis keys look like 'section.field'", f"sweep.axes.{key}")
            section, name = key.split(".")
            if section not in SECTIONS or section in ("sweep", "output"):
                raise ConfigError(f"unknown axis section {section!r}", f"sweep.axes.{key}")
            if name not in {f.name for f in fields(SECTIONS[section])}:
                raise ConfigError(f"unknown axis field {name!r}", f"sweep.axes.{key}")
            if not isinstance(values, list) or not values:
                raise ConfigError("axis values must be a nonempty list", f"sweep.axes.{key}")


@dataclass(frozen=True)
class OutputSpec:
    name: str = ""  # file stem; empty means the experiment name
    snapshots: bool = False

    def validate(self):
        if any(c in self.name for c in "/\\"):
            raise ConfigError("name must be a bare file stem", "output.name")


SECTIONS = {
    "forcing": ForcingSpec,
    "absorption": AbsorptionSpec,
    "geometry": GeometrySpec,
    "initial": InitialSpec,
    "control": ControlSpec,
    "numerics": NumericsSpec,
    "sweep": SweepSpec,
    "output": OutputSpec,
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "ode"
    seed: int = 0
    forcing: ForcingSpec = ForcingSpec()
    absorption: AbsorptionSpec = AbsorptionSpec()
    geometry: GeometrySpec = GeometrySpec()
    initial: InitialSpec = InitialSpec()
    control: ControlSpec = ControlSpec()
    numerics: NumericsSpec = NumericsSpec()
    sweep: SweepSpec = SweepSpec()
    output: OutputSpec = OutputSpec()

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}", "experiment")
        for name in SECTIONS:
            getattr(self, name).validate()
        return self

    def to_dict(self) -> dict:
        out = asdict(self)
        # TOML and JSON have no None: drop unset optionals
        for section in SECTIONS:
            out[section] = {k: v for k, v in out[section].items() if v is not None}
        return out

    def with_value(self, dotted: str, value) -> "ExperimentConfig":
        data = self.to_dict()
        section, name = dotted.split(".")
        data[section][name] = value
        return config_from_dict(data)


def _coerce(spec_cls, name: str, value, path: str):
    kind = {f.name: f.type for f in fields(spec_cls)}[name]
    if isinstance(value, bool) and "bool" not in str(kind):
        raise ConfigError("expected a number or string, got a boolean", path)
    if "float" in str(kind) and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if "float" in str(kind) and isinstance(value, float) and math.isnan(value):
        raise ConfigError("NaN is not a valid value", path)
    expect = (float,) if "float" in str(kind) else (int,) if kind in ("int", int) else \
        (str,) if kind in ("str", str) else (bool,) if kind in ("bool", bool) else (object,)
    if "None" in str(kind) and value is None:
        return value
    if not isinstance(value, expect):
        raise ConfigError(f"expected {expect[0].__name__}, got {type(value).__name__}", path)
    return value


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a table")
    known_top = {"experiment", "seed", *SECTIONS}
    for key in data:
        if key not in known_top:
            raise ConfigError(f"unknown key {key!r}", key)
    kwargs: dict[str, Any] = {}
    if "experiment" in data:
        kwargs["experiment"] = str(data["experiment"])
    if "seed" in data:
        if not isinstance(data["seed"], int) or isinstance(data["seed"], bool):
            raise ConfigError("seed must be an integer", "seed")
        kwargs["seed"] = data["seed"]
    for section, spec_cls in SECTIONS.items():
        raw = data.get(section, {})
        if not isinstance(raw, dict):
            raise ConfigError("section must be a table", section)
        names = {f.name for f in fields(spec_cls)}
        values = {}
        for key, value in raw.items():
            path = f"{section}.{key}"
            if key not in names:
                raise ConfigError(f"unknown key {key!r}", path)
            values[key] = value if key in ("axes", "nu") else _coerce(spec_cls, key, value, path)
        kwargs[section] = spec_cls(**values)
    return ExperimentConfig(**kwargs).validate()


def load_config(path: str | Path, experiment: str | None = None) -> ExperimentConfig:
    """Read TOML, or a JSON metadata sidecar (its ``config`` entry)."""
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        if path.suffix == ".json":
            data = json.loads(text)
            data = data.get("config", data)
        else:
            data = tomllib.loads(text.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config: {exc}", str(path)) from None
    if experiment is not None:
        declared = data.get("experiment")
        if declared is not None and declared != experiment:
            raise ConfigError(f"config declares {declared!r} but {experiment!r} was requested",
                              "experiment")
        data = {**data, "experiment": experiment}
    return config_from_dict(data)
