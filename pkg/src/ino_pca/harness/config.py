"""Experiment configuration and its TOML/JSON round trip."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..algorithms import AlgorithmSpec, parse_algorithm_spec
from ..errors import ConfigError
from ..spiked_model import InitSpec, XiDist, parse_init_spec, parse_xi_spec

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = ["ExperimentConfig", "paper_config", "desk_config", "load_config", "steps_for"]


def steps_for(p: int, t: float) -> int:
    """Sample index ``floor(p t)`` of macroscopic time ``t``."""
    return int(math.floor(p * t + 1e-9))


@dataclass(frozen=True)
class ExperimentConfig:
    p: int = 10_000
    omega: float = 1.0
    algorithm: AlgorithmSpec = AlgorithmSpec("ino", 0.5)
    xi: XiDist = XiDist("uniform")
    init: InitSpec = InitSpec()
    t_max: float = 30.0
    trials: int = 20
    seed: int = 0
    sample_every: float = 0.1
    switch_t: float | None = None
    switch_xi: XiDist | None = None
    abs_q: bool | None = None
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if self.p < 2:
            raise ConfigError(f"p must be at least 2, got {self.p}")
        if self.omega < 0:
            raise ConfigError(f"omega must be non-negative, got {self.omega}")
        if self.trials < 1:
            raise ConfigError(f"need at least one trial, got {self.trials}")
        if not self.t_max > 0:
            raise ConfigError(f"t_max must be positive, got {self.t_max}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not self.sample_every > 0 or steps_for(self.p, self.sample_every) < 1:
            raise ConfigError(f"sample_every={self.sample_every} is shorter than one step at p={self.p}")
        if (self.switch_t is None) != (self.switch_xi is None):
            raise ConfigError("a switch needs both a time and a second xi distribution")
        if self.switch_t is not None and not 0 < self.switch_t < self.t_max:
            raise ConfigError(f"switch time must lie in (0, t_max), got {self.switch_t}")
        for ts in self.snapshot_times:
            if not 0 <= ts <= self.t_max:
                raise ConfigError(f"snapshot time {ts} outside [0, t_max]")
        object.__setattr__(self, "snapshot_times", tuple(sorted(float(t) for t in self.snapshot_times)))

    @property
    def tau(self) -> float | None:
        return self.algorithm.tau

    @property
    def n_steps(self) -> int:
        return steps_for(self.p, self.t_max)

    @property
    def record_interval(self) -> int:
        return steps_for(self.p, self.sample_every)

    @property
    def use_abs_q(self) -> bool:
        """``|Q|`` is reported for cold starts and lazily initialized
        algorithms, whose sign is arbitrary, unless set explicitly."""
        if self.abs_q is not None:
            return self.abs_q
        return self.init.mode == "cold" or self.algorithm.lazy_init or self.switch_t is not None

    @property
    def lambda_cap(self) -> float:
        return 10.0 * max(1.0, self.omega + 1.0, self.init.lambda0)

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (AlgorithmSpec, XiDist)):
                v = str(v)
            elif isinstance(v, InitSpec):
                out["lambda0"] = v.lambda0
                v = str(v)
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)} | {"lambda0", "tau"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        lambda0 = float(data.pop("lambda0", 1.0))
        tau = data.pop("tau", None)
        if "algorithm" in data:
            data["algorithm"] = parse_algorithm_spec(str(data["algorithm"]), default_tau=tau)
        elif tau is not None:
            data["algorithm"] = AlgorithmSpec("ino", float(tau))
        if "xi" in data:
            data["xi"] = parse_xi_spec(str(data["xi"]))
        if data.get("switch_xi") is not None:
            data["switch_xi"] = parse_xi_spec(str(data["switch_xi"]))
        data["init"] = parse_init_spec(str(data.get("init", "warm:0.1")), lambda0)
        if "snapshot_times" in data:
            data["snapshot_times"] = tuple(data["snapshot_times"])
        for key, typ in (("p", int), ("trials", int), ("seed", int)):
            if key in data:
                data[key] = typ(data[key])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def paper_config(**changes) -> ExperimentConfig:
    """Published defaults: p = 10^4, tau = 0.5, omega = 1, 20 trials, warm start."""
    return ExperimentConfig().replace(**changes)


def desk_config(**changes) -> ExperimentConfig:
    """Desk-scale defaults used by the reproduction presets."""
    return ExperimentConfig(p=2000, trials=10).replace(**changes)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a TOML config, or the ``config`` table of a JSON run manifest."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    if path.suffix == ".json":
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        data = data.get("config", data)
    else:
        try:
            data = tomllib.loads(raw.decode())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: invalid TOML ({exc})") from None
        data = data.get("experiment", data)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a table of config keys")
    return ExperimentConfig.from_dict(data)
