"""Flat key=value configuration files shared by the CLI and the service.

Grammar: one `key = value` per line, `#` starts a comment, blank lines
are skipped. Keys mirror command-line flag names with underscores; a
flag given on the command line overrides the file. The five loss
weights use dedicated keys (weight_adversarial, weight_cycle,
weight_perceptual, weight_region, weight_detail) and betas is a
comma-separated pair.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

from .errors import ConfigurationError
from .losses import LossWeights
from .training import TrainConfig

_SCALAR_FIELDS: dict[str, type] = {
    "w_visual": float,
    "learning_rate": float,
    "epochs": int,
    "batch_size": int,
    "image_size": int,
    "seed": int,
    "checkpoint_interval": int,
    "base_width": int,
    "max_steps": int,
    "perceptual_features": str,
}

_WEIGHT_FIELDS = {
    "weight_adversarial": "adversarial",
    "weight_cycle": "cycle",
    "weight_perceptual": "perceptual",
    "weight_region": "region",
    "weight_detail": "detail",
}

#: every key train_config_from_options accepts
TRAIN_OPTION_KEYS = (*_SCALAR_FIELDS, *_WEIGHT_FIELDS, "betas")

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_bool(key: str, value) -> bool:
    if isinstance(value, bool):
        return value
    lowered = str(value).strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ConfigurationError(f"bad boolean for {key!r}: {value!r}")


def read_config_file(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    options: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key:
                raise ConfigurationError(f"{path}:{lineno}: expected key = value")
            options[key] = value
    return options


def _convert(key: str, value, kind: type):
    if isinstance(value, kind):
        return value
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad value for {key!r}: {value!r}") from exc


def _parse_betas(value) -> tuple[float, float]:
    if isinstance(value, (tuple, list)):
        parts = list(value)
    else:
        parts = str(value).split(",")
    if len(parts) != 2:
        raise ConfigurationError(f"betas must be two comma-separated values, got {value!r}")
    return (_convert("betas", parts[0], float), _convert("betas", parts[1], float))


def train_config_from_options(options: Mapping[str, object]) -> TrainConfig:
    """Build a TrainConfig from flat options; unknown keys fail loudly."""
    kwargs: dict[str, object] = {}
    weight_kwargs: dict[str, float] = {}
    for key, value in options.items():
        if value is None:
            continue
        if key in _SCALAR_FIELDS:
            kwargs[key] = _convert(key, value, _SCALAR_FIELDS[key])
        elif key in _WEIGHT_FIELDS:
            weight_kwargs[_WEIGHT_FIELDS[key]] = _convert(key, value, float)
        elif key == "betas":
            kwargs["betas"] = _parse_betas(value)
        else:
            raise ConfigurationError(f"unknown training config key {key!r}")
    if weight_kwargs:
        try:
            kwargs["weights"] = LossWeights(**weight_kwargs)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
    return TrainConfig(**kwargs)


def merge_options(
    file_options: Mapping[str, object] | None, flag_options: Mapping[str, object]
) -> dict[str, object]:
    """Config file values overlaid by explicitly given flags (flags win)."""
    merged: dict[str, object] = dict(file_options or {})
    for key, value in flag_options.items():
        if value is not None:
            merged[key] = value
    return merged
