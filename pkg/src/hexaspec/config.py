"""Run configuration: nested dataclasses loaded from TOML or JSON."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli
import tomli_w

from .errors import ConfigError

FORMATS = ("csv", "json")


@dataclass(frozen=True)
class PotentialSection:
    cosine: tuple = ()


@dataclass(frozen=True)
class LambdaSection:
    min: float = -50.0
    max: float = 1000.0
    grid: int = 2000


@dataclass(frozen=True)
class ThetaSection:
    grid: int = 181


@dataclass(frozen=True)
class PerturbationSection:
    epsilon: float = 0.0
    c1: float = 0.0


@dataclass(frozen=True)
class TolerancesSection:
    integrator: float = 1e-10
    root: float = 1e-10


@dataclass(frozen=True)
class OutputSection:
    path: str = ""
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    potential: PotentialSection = field(default_factory=PotentialSection)
    lambda_: LambdaSection = field(default_factory=LambdaSection)
    theta: ThetaSection = field(default_factory=ThetaSection)
    perturbation: PerturbationSection = field(default_factory=PerturbationSection)
    tolerances: TolerancesSection = field(default_factory=TolerancesSection)
    output: OutputSection = field(default_factory=OutputSection)

    def __post_init__(self):
        _validate(self)


# external key -> attribute name
_SECTIONS = {
    "potential": ("potential", PotentialSection),
    "lambda": ("lambda_", LambdaSection),
    "theta": ("theta", ThetaSection),
    "perturbation": ("perturbation", PerturbationSection),
    "tolerances": ("tolerances", TolerancesSection),
    "output": ("output", OutputSection),
}


def _number(value, key, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key)
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"expected an integer, got {value!r}", key)
        return int(value)
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(f"must be finite, got {value!r}", key)
    return v


def _coerce(section_cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError("expected a table", prefix)
    known = {f.name: f for f in fields(section_cls)}
    kwargs = {}
    for key, value in data.items():
        dotted = f"{prefix}.{key}"
        if key not in known:
            raise ConfigError("unknown key", dotted)
        default = known[key].default
        if key == "cosine":
            if not isinstance(value, list):
                raise ConfigError("expected an array of numbers", dotted)
            kwargs[key] = tuple(_number(v, f"{dotted}[{i}]") for i, v in enumerate(value))
        elif isinstance(default, bool):
            raise ConfigError("unsupported boolean", dotted)
        elif isinstance(default, int):
            kwargs[key] = _number(value, dotted, int)
        elif isinstance(default, float):
            kwargs[key] = _number(value, dotted)
        else:
            if not isinstance(value, str):
                raise ConfigError(f"expected a string, got {value!r}", dotted)
            kwargs[key] = value
    return section_cls(**kwargs)


def _validate(cfg: RunConfig):
    if cfg.lambda_.grid < 2:
        raise ConfigError("must be at least 2", "lambda.grid")
    if not cfg.lambda_.max > cfg.lambda_.min:
        raise ConfigError("must exceed lambda.min", "lambda.max")
    if cfg.theta.grid < 2:
        raise ConfigError("must be at least 2", "theta.grid")
    if not abs(cfg.perturbation.epsilon) < math.pi / 6:
        raise ConfigError("|epsilon| must be below pi/6", "perturbation.epsilon")
    if not -1.0 <= cfg.perturbation.c1 <= 1.0:
        raise ConfigError("must lie in [-1, 1]", "perturbation.c1")
    if not cfg.tolerances.integrator > 0:
        raise ConfigError("must be positive", "tolerances.integrator")
    if not cfg.tolerances.root > 0:
        raise ConfigError("must be positive", "tolerances.root")
    if cfg.output.format not in FORMATS:
        raise ConfigError(f"must be one of {FORMATS}", "output.format")


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level must be a table")
    kwargs = {}
    for key, value in data.items():
        if key not in _SECTIONS:
            raise ConfigError("unknown section", key)
        attr, cls = _SECTIONS[key]
        kwargs[attr] = _coerce(cls, value, key)
    return RunConfig(**kwargs)


def config_to_dict(cfg: RunConfig) -> dict:
    out = {}
    for key, (attr, _) in _SECTIONS.items():
        sec = asdict(getattr(cfg, attr))
        if "cosine" in sec:
            sec["cosine"] = list(sec["cosine"])
        out[key] = sec
    return out


def load_config(path) -> RunConfig:
    """Read a ``.toml`` or ``.json`` run configuration.

    Omitted keys take their defaults.

    Raises
    ------
    ConfigError
        On a parse error (with line information) or an invalid value (with
        the dotted key name).
    """
    path = Path(path)
    suffix = path.suffix.lower()
    text = path.read_text(encoding="utf-8")
    if suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    elif suffix == ".toml":
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"TOML parse error: {exc}")
    else:
        raise ConfigError(f"unsupported config extension {suffix!r} (use .toml or .json)")
    return config_from_dict(data)


def dump_config(cfg: RunConfig, fmt: str = "toml") -> str:
    data = config_to_dict(cfg)
    if fmt == "toml":
        return tomli_w.dumps(data)
    if fmt == "json":
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
