"""Experiment configuration: nested dataclasses mirroring the JSON config file.

The file has the sections ``dynamics``, ``clock``, ``dataset``, ``seeds``,
``analysis`` and optionally ``simulation`` and ``sweep``. Every section and
field is optional; missing values fall back to the linear Config 1 setup.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .dde import DelayDynamics
from .errors import ConfigurationError
from .signal import ClockConfig, default_dt

CONFIG1 = {"a0": -1.0, "a1": 0.9 * math.exp(-0.1), "tau": 1.0}
CONFIG2 = {"a0": -0.5, "a1": 0.4 * math.exp(-0.1), "tau": 1.0}


@dataclass
class DynamicsSection:
    a0: float = CONFIG1["a0"]
    a1: float = CONFIG1["a1"]
    tau: float = 1.0
    nonlinearity: str = "identity"
    noise_std: float = 1e-3
    input_gain: float = 1.0

    def build(self, noise: bool = True) -> DelayDynamics:
        return DelayDynamics.scalar(self.a0, self.a1, self.tau, nonlinearity=self.nonlinearity,
                                    b=self.input_gain,
                                    noise_std=self.noise_std if noise else 0.0)


@dataclass
class ClockSection:
    theta: float = 0.2
    N: int = 10
    T: float | None = None
    dt: float | None = None
    mask: str = "binary"

    def build(self) -> ClockConfig:
        return ClockConfig(self.theta, self.N, self.T)

    def step(self, delays) -> float:
        return self.dt if self.dt is not None else default_dt(self.theta, delays)


@dataclass
class DatasetSection:
    train: int = 500
    test: int = 70
    warmup: int = 50
    ridge_lambda: float | str = 1e-6
    noise_at_test: bool = True


@dataclass
class SeedSection:
    input: int = 0
    mask: int = 1
    noise: int = 2
    runs: int = 1


@dataclass
class AnalysisSection:
    t1: float | None = None
    k_max: int = 10
    k0: int = 10
    branches: int = 8
    eps: float | None = None
    t_end: float = 50.0
    dt: float = 1e-3
    phi: float = 1.0


@dataclass
class SimulationSection:
    t_end: float = 100.0
    phi: float = 0.0
    x0: float | None = None
    input: float | str = 0.0


@dataclass
class ExperimentConfig:
    dynamics: DynamicsSection = field(default_factory=DynamicsSection)
    clock: ClockSection = field(default_factory=ClockSection)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    seeds: SeedSection = field(default_factory=SeedSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    simulation: SimulationSection = field(default_factory=SimulationSection)
    sweep: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        self.clock.build()
        self.dynamics.build()
        dt = self.clock.step([self.dynamics.tau])
        if not dt > 0:
            raise ConfigurationError("clock.dt must be positive")
        d = self.dataset
        if min(d.train, d.test) < 2 or d.warmup < 0:
            raise ConfigurationError("dataset.train and dataset.test must be >= 2, warmup >= 0")
        if isinstance(d.ridge_lambda, str) and d.ridge_lambda != "auto":
            raise ConfigurationError(
                f"dataset.ridge_lambda must be a number or 'auto', got {d.ridge_lambda!r}"
            )
        if self.seeds.runs < 1:
            raise ConfigurationError("seeds.runs must be >= 1")
        if self.clock.mask not in ("binary", "uniform"):
            raise ConfigurationError(f"clock.mask must be 'binary' or 'uniform', got {self.clock.mask!r}")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a JSON object")
        sections = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for name, value in data.items():
            if name not in sections:
                raise ConfigurationError(f"unknown config section {name!r}")
            if name == "sweep":
                if not isinstance(value, dict):
                    raise ConfigurationError("sweep must map field paths to value lists")
                kwargs[name] = value
                continue
            kwargs[name] = _section(sections[name].default_factory, name, value)
        return cls(**kwargs).validate()

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(
                f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
        return cls.from_dict(data)

    def replace(self, **changes) -> "ExperimentConfig":
        """Copy with dotted-path overrides, e.g. ``replace(**{"dynamics.a0": -0.5})``.

        Changing ``clock.theta`` or ``clock.N`` drops an explicit ``clock.T``.
        """
        data = self.to_dict()
        for path, value in changes.items():
            section, _, key = path.partition(".")
            if section not in data or not isinstance(data[section], dict) or key not in data[section]:
                raise ConfigurationError(f"unknown config field {path!r}")
            data[section][key] = value
            if section == "clock" and key in ("theta", "N") and "clock.T" not in changes:
                data["clock"]["T"] = None
        return ExperimentConfig.from_dict(data)


_NUMERIC = {float: (int, float), int: (int,), bool: (bool,)}


def _section(factory, name: str, values) -> object:
    if not isinstance(values, dict):
        raise ConfigurationError(f"section {name!r} must be a JSON object")
    proto = factory()
    known = {f.name: f for f in dataclasses.fields(proto)}
    for key, value in values.items():
        if key not in known:
            raise ConfigurationError(f"unknown field {name}.{key}")
        default = getattr(proto, key)
        if isinstance(default, bool):
            ok = isinstance(value, bool)
        elif isinstance(default, int):
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif isinstance(default, float):
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
            if key == "ridge_lambda":
                ok = ok or value == "auto"
            if key == "input":
                ok = ok or isinstance(value, str)
        else:
            ok = value is None or isinstance(value, (int, float, str)) and not isinstance(value, bool)
        if not ok:
            raise ConfigurationError(f"field {name}.{key} has invalid value {value!r}")
    return dataclasses.replace(proto, **values)
