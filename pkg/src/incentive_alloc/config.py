"""Flat ``key = value`` experiment config files.

Blank lines and ``#`` comments are ignored. ``dataset``, ``budget`` and
``strategy`` are required; everything else falls back to the defaults of
:class:`ExperimentConfig` (four actions, lambda 0.1, gamma 0.9, rho0 0.5,
theta0 0, horizon 150).
"""

from __future__ import annotations

import dataclasses
from typing import Iterable

from .engine import ExperimentConfig

REQUIRED = ("dataset", "budget", "strategy")
_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_BOOLS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


class ConfigError(ValueError):
    pass


def _coerce(key: str, raw: str):
    kind = _FIELDS[key].type
    try:
        if kind == "bool":
            return _BOOLS[raw.lower()]
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind.startswith("tuple"):
            lo, hi = (int(x) for x in raw.split(","))
            return (lo, hi)
        if kind.startswith("str | None"):
            return raw or None
        return raw
    except (KeyError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {raw!r} as {kind}") from None


def parse_pairs(lines: Iterable[str]) -> dict[str, str]:
    pairs = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        pairs[key] = value
    return pairs


def parse_config(text: str, overrides: Iterable[str] = ()) -> ExperimentConfig:
    pairs = parse_pairs(text.splitlines())
    pairs.update(parse_pairs(overrides))
    unknown = sorted(k for k in pairs if k not in _FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = [k for k in REQUIRED if k not in pairs]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")
    cfg = ExperimentConfig(**{k: _coerce(k, v) for k, v in pairs.items()})
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for name in _FIELDS:
        value = getattr(cfg, name)
        if value is None:
            continue
        if isinstance(value, tuple):
            value = ",".join(map(str, value))
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"
