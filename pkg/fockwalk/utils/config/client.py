from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

import yaml
from loguru import logger
from pydantic import BaseModel, ValidationError, validator

from fockwalk.core.entities import BudgetParams, ConfigError, JCParams, ProtocolParams, WalkVariant
from fockwalk.core.jc_walk import trapping_time
from fockwalk.utils.config.server import TRUNCATION_MARGIN

Mode = Literal["walk", "protocol", "fidelity-curve", "validate"]
RESERVED_KEYS = ("mode", "output_path", "output_format")


def _validated(model: type[BaseModel], values: dict[str, Any]) -> BaseModel:
    unknown = sorted(set(values) - set(model.__fields__))
    if unknown:
        raise ConfigError(f"Unknown parameter(s) for {model.__name__}: {', '.join(unknown)}")
    try:
        return model.parse_obj(values)
    except ValidationError as e:
        raise ConfigError(f"Invalid {model.__name__}: {e}") from e


class WalkSettings(BaseModel):
    variant: Literal["hadamard"] | Literal["flip"] | Literal["damped"] = "damped"
    eta: float = 0.0
    g: float = 1.0
    n_target: int = 16
    k: int = 1
    tau: float | None = None
    n_max: int | None = None
    steps: int = 100
    initial_coin: Literal["excited"] | Literal["ground"] = "excited"

    class Config:
        frozen = True

    @validator("steps")
    def steps_non_negative(cls, steps):
        if steps < 0:
            raise ValueError("steps must be non-negative")
        return steps

    def jc_params(self) -> JCParams:
        tau = self.tau if self.tau is not None else trapping_time(self.g, self.n_target, self.k)
        return JCParams(g=self.g, tau=tau)

    def walk_variant(self) -> WalkVariant:
        return WalkVariant(kind=self.variant, eta=self.eta)

    @property
    def resolved_n_max(self) -> int:
        return self.n_max if self.n_max is not None else self.n_target + TRUNCATION_MARGIN


class CurveSettings(BaseModel):
    """
    Targets to sweep plus the protocol parameters shared by every run. The
    budget's wait multiple and rate ratio follow from the protocol rates
    unless given.
    """

    targets: list[int] = [2, 4, 6, 8, 10]
    alpha: float = 0.5
    wait_multiple: float | None = None
    rate_ratio: float | None = None
    analytic_only: bool = False
    protocol: dict[str, Any] = {}

    def protocol_params(self, n_target: int) -> ProtocolParams:
        return _validated(ProtocolParams, {**self.protocol, "n_target": n_target})

    def budget(self, n_target: int) -> BudgetParams:
        p = self.protocol_params(n_target)
        wait_multiple = self.wait_multiple if self.wait_multiple is not None else p.gamma_sted * p.tau_gamma
        rate_ratio = self.rate_ratio if self.rate_ratio is not None else p.gamma_c / p.gamma_sted
        return _validated(BudgetParams, {"n_target": n_target, "wait_multiple": wait_multiple, "alpha": self.alpha, "rate_ratio": rate_ratio})


class RunConfig(BaseModel):
    mode: Mode
    params: dict[str, Any] = {}
    output_path: str | None = None
    output_format: Literal["csv"] | Literal["json"] = "csv"

    def to_yaml(self) -> str:
        return yaml.safe_dump({**self.params, "mode": self.mode, "output_path": self.output_path, "output_format": self.output_format}, sort_keys=True)

    @classmethod
    def from_yaml(cls, yaml_str: str, mode: str | None = None) -> "RunConfig":
        data = yaml.safe_load(yaml_str) or {}
        if not isinstance(data, dict):
            raise ConfigError("A config file must be a flat key-value mapping")
        reserved = {key: data.pop(key) for key in RESERVED_KEYS if key in data}
        if mode is not None:
            if reserved.get("mode", mode) != mode:
                logger.warning(f"Config file is for mode {reserved['mode']}, running {mode}")
            reserved["mode"] = mode
        if reserved.get("output_path") is None:
            reserved.pop("output_path", None)
        try:
            return cls.parse_obj({**reserved, "params": data})
        except ValidationError as e:
            raise ConfigError(f"Invalid run config: {e}") from e

    @classmethod
    def load(cls, path: str | Path | None, mode: str) -> "RunConfig":
        if path is None:
            return cls(mode=mode)
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e
        return cls.from_yaml(text, mode=mode)

    def with_overrides(self, overrides: dict[str, Any]) -> "RunConfig":
        return self.copy(update={"params": {**self.params, **overrides}})

    def protocol_params(self) -> ProtocolParams:
        return _validated(ProtocolParams, self.params)

    def walk_settings(self) -> WalkSettings:
        return _validated(WalkSettings, self.params)

    def curve_settings(self) -> CurveSettings:
        own = {key: value for key, value in self.params.items() if key in CurveSettings.__fields__ and key != "protocol"}
        rest = {key: value for key, value in self.params.items() if key not in own}
        unknown = sorted(set(rest) - set(ProtocolParams.__fields__))
        if unknown:
            raise ConfigError(f"Unknown parameter(s) for fidelity-curve: {', '.join(unknown)}")
        if "n_target" in rest:
            raise ConfigError("fidelity-curve takes targets, not n_target")
        settings = _validated(CurveSettings, {**own, "protocol": rest})
        if not settings.targets:
            raise ConfigError("no targets")
        return settings


def parse_overrides(args: list[str]) -> dict[str, Any]:
    """
    ["--gamma-c", "0.4", "--targets", "[2, 4]"] -> {"gamma_c": 0.4, "targets": [2, 4]}.
    Values are read as YAML scalars or flow collections.
    """
    overrides = {}
    it = iter(args)
    for arg in it:
        if not arg.startswith("--") or len(arg) <= 2:
            raise ConfigError(f"Expected --<param>, got {arg!r}")
        key = arg[2:]
        if "=" in key:
            key, raw = key.split("=", 1)
        else:
            raw = next(it, None)
            if raw is None:
                raise ConfigError(f"Missing value for --{key}")
        key = key.replace("-", "_")
        try:
            overrides[key] = yaml.safe_load(raw)
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse value {raw!r} for --{key}") from e
    return overrides
