"""JSON run configuration shared by all subcommands."""

from __future__ import annotations

import copy
import json
import os

from .cnn import TrainConfig
from .errors import ConfigError
from .kinematics import PATTERN_NAMES, FoldPattern, default_pattern, pattern_from_dict
from .motion import MATERIALS, MaterialProfile
from .physics import FrontendConfig

CONFIG_ENV = "FOLDCAP_CONFIG"

DEFAULTS = {
    "seed": 0,
    "pattern": {"kind": "accordion-p", "n_channels": 4},
    "frontend": FrontendConfig().to_dict(),
    "material": "cloth",
    "sessions": 4,
    "minutes": 15.0,
    "sync_preamble": False,
    "train": {k: v for k, v in TrainConfig().to_dict().items() if k != "seed"},
    "validation_fraction": 0.1,
    "sync": {"search_window_s": 2.0, "weak_threshold": 0.3, "sync_span_s": None},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path: str | None = None) -> dict:
    """Defaults overlaid with a JSON file; ``FOLDCAP_CONFIG`` supplies the path when none is given."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return copy.deepcopy(DEFAULTS)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return _merge(DEFAULTS, data)


def resolve_pattern(spec) -> FoldPattern:
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    if kind not in PATTERN_NAMES:
        raise ConfigError(f"unknown pattern {kind!r}; valid patterns: {', '.join(PATTERN_NAMES)}")
    try:
        if set(spec) <= {"kind", "n_channels"}:
            return default_pattern(kind, int(spec.get("n_channels", 4)))
        return pattern_from_dict(spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid pattern definition: {exc}") from None


def resolve_material(spec) -> MaterialProfile:
    if isinstance(spec, str):
        if spec not in MATERIALS:
            raise ConfigError(f"unknown material {spec!r}; valid materials: {', '.join(MATERIALS)}")
        return MATERIALS[spec]
    try:
        return MaterialProfile(**spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid material profile: {exc}") from None


def resolve_frontend(spec: dict) -> FrontendConfig:
    try:
        return FrontendConfig(**spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid frontend settings: {exc}") from None


def resolve_train(spec: dict, seed: int) -> TrainConfig:
    try:
        return TrainConfig(**{**spec, "seed": seed})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid training settings: {exc}") from None
