"""JSON experiment configurations, validated before any computation starts."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

from ..exceptions import ConfigError


def _require(cond: bool, name: str, msg: str):
    if not cond:
        raise ConfigError(f"{name}: {msg}")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0

    def validate(self):
        _require(isinstance(self.seed, int) and self.seed >= 0, "seed", "must be a nonnegative integer")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class KernelFields(ExperimentConfig):
    d: int = 1
    theta: float = 1.0

    def validate(self):
        super().validate()
        _require(isinstance(self.d, int) and 1 <= self.d <= 8, "d", "must be an integer in 1..8")
        _require(self.theta > 0, "theta", "must be positive")


@dataclass(frozen=True)
class InstanceConfig(KernelFields):
    eps: float = 0.5
    N_list: tuple = (5, 10, 20)
    profile_points: int = 2001
    B: float | None = None
    class_eps: float | None = None

    def validate(self):
        super().validate()
        _require(self.eps > 0, "eps", "must be positive")
        _require(len(self.N_list) > 0 and all(isinstance(n, int) and n >= 1 for n in self.N_list),
                 "N_list", "must be a nonempty list of integers >= 1")
        _require(self.profile_points >= 10, "profile_points", "must be >= 10")
        if self.B is not None or self.class_eps is not None:
            _require(self.B is not None and self.B > 0, "B", "must be positive when a class is requested")
            _require(self.class_eps is not None and 0 < self.class_eps < self.B, "class_eps", "must lie in (0, B)")


@dataclass(frozen=True)
class VerifyConfig(ExperimentConfig):
    perturb_b: float = 1.0
    samples: int = 20_000

    def validate(self):
        super().validate()
        _require(self.perturb_b > 0, "perturb_b", "must be positive")
        _require(self.samples >= 1000, "samples", "must be >= 1000")


@dataclass(frozen=True)
class MigConfig(KernelFields):
    noise_var: float = 1.0
    T_list: tuple = (64, 256, 1024, 4096)
    candidates: int = 8192
    n_max: int = 60

    def validate(self):
        super().validate()
        _require(self.noise_var > 0, "noise_var", "must be positive")
        _require(len(self.T_list) > 0 and all(isinstance(t, int) and t >= 3 for t in self.T_list),
                 "T_list", "must be a nonempty list of integers >= 3")
        _require(self.candidates >= max(self.T_list), "candidates", "must be at least max(T_list)")
        _require(20 <= self.n_max <= 400, "n_max", "must lie in 20..400")


@dataclass(frozen=True)
class RegretConfig(KernelFields):
    algorithm: str = "gp_ucb"
    sigma: float = 0.1
    B: float = 1.0
    delta: float = 0.1
    T_list: tuple = (500, 1000, 2000)
    trials: int = 10
    eps: float | None = None
    calibration: float = 1.0
    candidates: int = 1024

    def validate(self):
        super().validate()
        _require(self.algorithm in ("gp_ucb", "max_variance", "random"), "algorithm",
                 "must be one of gp_ucb, max_variance, random")
        _require(self.sigma > 0, "sigma", "must be positive")
        _require(self.B > 0, "B", "must be positive")
        _require(0 < self.delta < 1, "delta", "must lie in (0, 1)")
        _require(len(self.T_list) > 0 and all(isinstance(t, int) and t >= 1 for t in self.T_list),
                 "T_list", "must be a nonempty list of positive integers")
        _require(isinstance(self.trials, int) and self.trials >= 1, "trials", "must be a positive integer")
        _require(self.eps is None or 0 < self.eps < self.B, "eps", "must lie in (0, B) when given")
        _require(self.calibration > 0, "calibration", "must be positive")
        _require(self.candidates >= 16, "candidates", "must be >= 16")


@dataclass(frozen=True)
class CertifyConfig(KernelFields):
    algorithm: str = "gp_ucb"
    eps: float = 0.05
    B: float = 10.0
    sigma: float = 0.05
    delta: float = 0.2
    T: int = 60
    trials: int = 30
    event: str = "report_in_region"
    pairs: tuple = ((0, 1), (0, 0))
    candidates: int = 256

    def validate(self):
        super().validate()
        _require(self.algorithm in ("gp_ucb", "max_variance", "random"), "algorithm",
                 "must be one of gp_ucb, max_variance, random")
        _require(0 < self.eps < self.B, "eps", "must lie in (0, B)")
        _require(self.sigma > 0, "sigma", "must be positive")
        _require(0 < self.delta < 1.0 / 3.0, "delta", "must lie in (0, 1/3)")
        _require(isinstance(self.T, int) and self.T >= 1, "T", "must be a positive integer")
        _require(isinstance(self.trials, int) and self.trials >= 30, "trials", "must be an integer >= 30")
        _require(self.event in ("report_in_region", "half_queries_in_region"), "event",
                 "must be report_in_region or half_queries_in_region")
        _require(len(self.pairs) > 0 and all(len(p) == 2 for p in self.pairs), "pairs",
                 "must be a nonempty list of [i, j] pairs")
        _require(self.candidates >= 16, "candidates", "must be >= 16")


CONFIG_TYPES = {
    "instance": InstanceConfig,
    "verify": VerifyConfig,
    "mig": MigConfig,
    "regret": RegretConfig,
    "certify": CertifyConfig,
}


def _coerce(name: str, value, default):
    if isinstance(default, bool):
        _require(isinstance(value, bool), name, "must be a boolean")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        _require(isinstance(value, int) and not isinstance(value, bool), name, "must be an integer")
        return value
    if isinstance(default, float) or (default is None and isinstance(value, (int, float))):
        _require(isinstance(value, (int, float)) and not isinstance(value, bool), name, "must be a number")
        _require(math.isfinite(value), name, "must be finite")
        return float(value)
    if isinstance(default, str):
        _require(isinstance(value, str), name, "must be a string")
        return value
    if isinstance(default, tuple):
        _require(isinstance(value, list), name, "must be a list")
        return tuple(tuple(v) if isinstance(v, list) else v for v in value)
    return value


def parse_config(subcommand: str, payload: dict, seed_override: int | None = None) -> ExperimentConfig:
    if subcommand not in CONFIG_TYPES:
        raise ConfigError(f"subcommand: unknown subcommand {subcommand!r}")
    if not isinstance(payload, dict):
        raise ConfigError("config: top level must be a JSON object")
    cls = CONFIG_TYPES[subcommand]
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(payload) - set(fields))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown field for {subcommand}")
    values = {}
    for name, value in payload.items():
        f = fields[name]
        default = f.default if f.default is not dataclasses.MISSING else None
        values[name] = _coerce(name, value, default)
    if seed_override is not None:
        values["seed"] = seed_override
    cfg = cls(**values)
    cfg.validate()
    return cfg


def load_config(path, subcommand: str, seed_override: int | None = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc.msg} at line {exc.lineno})")
    return parse_config(subcommand, payload, seed_override)


def config_hash(cfg: ExperimentConfig) -> str:
    text = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
