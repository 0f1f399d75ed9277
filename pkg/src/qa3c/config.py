"""Run configuration: ``key = value`` files, command-line overrides and the resolved dump."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass

from .exceptions import ConfigurationError
from .trainer import TrainConfig

REQUIRED = ("env", "variant", "total_episodes")
ALIASES = {"S": "sync_interval", "T_max": "total_episodes", "W": "workers"}


@dataclass
class RunConfig(TrainConfig):
    out_dir: str = "runs"

    def train_config(self) -> TrainConfig:
        fields = {f.name: getattr(self, f.name) for f in dataclasses.fields(TrainConfig)}
        return TrainConfig(**fields)


def _field_types() -> dict:
    hints = typing.get_type_hints(RunConfig)
    return {f.name: hints[f.name] for f in dataclasses.fields(RunConfig)}


def _convert(key: str, raw: str, kind, where: str):
    optional = typing.get_origin(kind) is typing.Union
    if optional:
        if raw.lower() in ("none", ""):
            return None
        kind = next(a for a in typing.get_args(kind) if a is not type(None))
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {raw!r} as {kind.__name__} ({where})") from None
    if raw == "":
        raise ConfigurationError(f"{key}: empty value ({where})")
    return raw


def _split(text: str, where: str):
    line = text.split("#", 1)[0].strip()
    if not line:
        return None
    if "=" not in line:
        raise ConfigurationError(f"expected 'key = value' ({where}), got {text.strip()!r}")
    key, value = (part.strip() for part in line.split("=", 1))
    if not key:
        raise ConfigurationError(f"missing key ({where})")
    return ALIASES.get(key, key), value


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse a config file body; ``overrides`` are ``key=value`` strings that win over the file."""
    types = _field_types()
    raw, origin = {}, {}
    entries = [(line, f"line {i}") for i, line in enumerate(text.splitlines(), 1)]
    entries += [(item, f"override {item!r}") for item in overrides]
    for line, where in entries:
        parsed = _split(line, where)
        if parsed is None:
            continue
        key, value = parsed
        if key not in types:
            raise ConfigurationError(f"{key}: unknown key ({where})")
        raw[key], origin[key] = value, where
    for key in REQUIRED:
        if key not in raw:
            raise ConfigurationError(f"{key}: required key is missing")
    values = {key: _convert(key, value, types[key], origin[key]) for key, value in raw.items()}
    config = RunConfig(**values)
    try:
        config.validate()
    except ConfigurationError as exc:
        key = str(exc).split(":", 1)[0]
        where = origin.get(key)
        raise ConfigurationError(f"{exc} ({where})" if where else str(exc)) from None
    return config


def dump_config(config: RunConfig) -> str:
    """Every field as ``key = value``; feeding the result to :func:`parse_config` gives the same config."""
    lines = []
    for f in dataclasses.fields(RunConfig):
        value = getattr(config, f.name)
        lines.append(f"{f.name} = {'none' if value is None else repr(value) if isinstance(value, float) else value}")
    return "\n".join(lines) + "\n"
