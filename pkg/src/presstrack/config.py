"""Run configuration: JSON with ``sim``, ``noise``, ``tracker`` and ``metrics`` sections."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .metrics import MetricsConfig
from .simulate import NoiseConfig, SimConfig
from .tracker import TrackerConfig

__all__ = ["RunConfig", "ConfigSchemaError", "read_config", "parse_config", "config_dict", "dump_config"]

_SECTIONS = {
    "sim": SimConfig,
    "noise": NoiseConfig,
    "tracker": TrackerConfig,
    "metrics": MetricsConfig,
}


class ConfigSchemaError(ValueError):
    """Bad configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)

    def validate(self) -> "RunConfig":
        for name in _SECTIONS:
            try:
                getattr(self, name).validate()
            except ValueError as e:
                key, _, msg = str(e).partition(": ")
                raise ConfigSchemaError(f"{name}.{key}", msg) from None
        return self


def _coerce(key: str, value, default):
    """Check ``value`` against the type of the default it replaces."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigSchemaError(key, f"expected a boolean, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list) or len(value) != len(default):
            raise ConfigSchemaError(key, f"expected a list of {len(default)} numbers, got {value!r}")
        return tuple(_coerce(key, v, d) for v, d in zip(value, default))
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigSchemaError(key, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float) or default is None:
        if value is None and default is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigSchemaError(key, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigSchemaError(key, f"expected a string, got {value!r}")
        return value
    raise ConfigSchemaError(key, "unsupported setting")


def parse_config(doc) -> RunConfig:
    """Build a validated :class:`RunConfig` from a decoded JSON object."""
    if not isinstance(doc, dict):
        raise ConfigSchemaError("<root>", "configuration must be a JSON object")
    for name in doc:
        if name not in _SECTIONS:
            raise ConfigSchemaError(name, f"unknown section (expected one of {sorted(_SECTIONS)})")
    sections = {}
    for name, cls in _SECTIONS.items():
        body = doc.get(name, {})
        if not isinstance(body, dict):
            raise ConfigSchemaError(name, "section must be a JSON object")
        defaults = cls()
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in body.items():
            if key not in known:
                raise ConfigSchemaError(f"{name}.{key}", "unknown key")
            kwargs[key] = _coerce(f"{name}.{key}", value, getattr(defaults, key))
        sections[name] = cls(**kwargs)
    return RunConfig(**sections).validate()


def read_config(path=None) -> RunConfig:
    """Read a JSON config file; ``None`` gives the defaults."""
    if path is None:
        return RunConfig().validate()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigSchemaError("<json>", f"{path}: line {e.lineno}: {e.msg}") from None
    return parse_config(doc)


def config_dict(cfg: RunConfig) -> dict:
    """Effective configuration, defaults included, as plain JSON data."""
    out = {}
    for name in _SECTIONS:
        sec = asdict(getattr(cfg, name))
        out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in sec.items()}
    return out


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(config_dict(cfg), indent=2, sort_keys=True) + "\n"
