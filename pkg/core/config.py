"""Run configuration: flags > environment > modules/permcover.conf > defaults."""

import configparser
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from core.errors import InvalidInputError

VERSION = "0.3.0"

CONF_PATH = Path(__file__).resolve().parent.parent / "modules" / "permcover.conf"

DEFAULTS = {
    "cache_dir": "permcover-cache",
    "max_n": 8,
    "audit_max_n": 6,
    "pair_max_n": 7,
    "workers": 1,
    "budget_seconds": 60.0,
    "log_dir": "log",
    "dot_max_n": 3,
}

ENVIRONMENT = {
    "cache_dir": "PERMCOVER_CACHE",
    "max_n": "PERMCOVER_MAX_N",
    "workers": "PERMCOVER_WORKERS",
}


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    cache_dir: str = DEFAULTS["cache_dir"]
    max_n: int = DEFAULTS["max_n"]
    audit_max_n: int = DEFAULTS["audit_max_n"]
    pair_max_n: int = DEFAULTS["pair_max_n"]
    workers: int = DEFAULTS["workers"]
    budget_seconds: float = DEFAULTS["budget_seconds"]
    log_dir: str = DEFAULTS["log_dir"]
    dot_max_n: int = DEFAULTS["dot_max_n"]
    quiet: bool = False
    use_cache: bool = True
    params: dict = field(default_factory=dict)
    version: str = VERSION

    def to_dict(self):
        return asdict(self)


def _coerce(key, raw):
    kind = type(DEFAULTS[key])
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise InvalidInputError(f"setting '{key}' expects {kind.__name__}, got '{raw}'")


def load_conf(conf_path=CONF_PATH):
    settings = {}
    if conf_path and Path(conf_path).exists():
        config = configparser.ConfigParser()
        config.read(conf_path)
        for key in DEFAULTS:
            value = config.get("DEFAULT", key, fallback=None)
            if value is not None:
                settings[key] = _coerce(key, value)
    return settings


def resolve_config(subcommand, flags=None, params=None, env=None, conf_path=CONF_PATH):
    """Merge the layers; `flags` holds only settings given on the command line."""
    env = os.environ if env is None else env
    settings = dict(DEFAULTS)
    settings.update(load_conf(conf_path))
    for key, var in ENVIRONMENT.items():
        if env.get(var):
            settings[key] = _coerce(key, env[var])
    extra = {}
    for key, value in (flags or {}).items():
        if value is None:
            continue
        if key in DEFAULTS:
            settings[key] = _coerce(key, value)
        else:
            extra[key] = value
    if settings["workers"] < 1:
        raise InvalidInputError("workers must be >= 1")
    if settings["max_n"] < 1:
        raise InvalidInputError("max_n must be >= 1")
    return RunConfig(subcommand=subcommand, params=dict(params or {}), **settings, **extra)
