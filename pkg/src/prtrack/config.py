"""Run configuration: nested key-value document with strict validation.

Unknown keys are rejected; every default is visible in the dataclass
definitions of the component configs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields

import yaml

from .embedder import TrainConfig
from .losses import LossWeights
from .postproc import MergeConfig
from .simgen import ScenarioConfig
from .tracker import TrackerConfig

__all__ = ["UnknownKeyError", "RangeError", "RunConfig", "load_config"]


class UnknownKeyError(Exception):
    pass


class RangeError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    merge: MergeConfig = field(default_factory=MergeConfig)
    seed: int = 0
    detector_noise: str = "none"
    detector_noise_param: float = 0.0
    sampling_stride: int = 25

    def reseeded(self, seed: int) -> "RunConfig":
        """Propagate one master seed into every component config."""
        return dataclasses.replace(
            self,
            seed=seed,
            scenario=dataclasses.replace(self.scenario, seed=seed),
            train=dataclasses.replace(self.train, seed=seed),
        )


_RANGES = {
    ("weights", "lambda_pa"): (0.0, None),
    ("weights", "lambda_reid"): (0.0, None),
    ("weights", "lambda_team"): (0.0, None),
    ("weights", "lambda_role"): (0.0, None),
    ("tracker", "alpha"): (0.0, 1.0),
    ("tracker", "appearance_weight"): (0.0, 1.0),
    ("tracker", "iou_gate"): (0.0, 1.0),
    ("scenario", "occlusion_rate"): (0.0, 1.0),
    ("scenario", "exit_rate"): (0.0, 1.0),
    ("scenario", "feature_noise_sigma"): (0.0, None),
}


def _check_range(section: str, key: str, value) -> None:
    bounds = _RANGES.get((section, key))
    if bounds is None:
        return
    lo, hi = bounds
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise RangeError(key)


def _build(cls, section: str, data: dict):
    valid = {f.name for f in fields(cls)}
    defaults = cls()
    kwargs = {}
    for key, value in data.items():
        if key not in valid:
            raise UnknownKeyError(f"{section}.{key}")
        if key == "weights":
            if not isinstance(value, dict):
                raise TypeError(f"{section}.{key} must be a mapping")
            kwargs[key] = _build(LossWeights, "weights", value)
            continue
        if key == "decay_epochs" and isinstance(value, list):
            value = tuple(value)
        default = getattr(defaults, key)
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError(f"{section}.{key} must be a boolean")
        elif isinstance(default, (int, float)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError(f"{section}.{key} must be a number")
            _check_range(section, key, value)
        elif isinstance(default, str) and not isinstance(value, str):
            raise TypeError(f"{section}.{key} must be a string")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise RangeError(str(exc)) from exc


_SECTIONS = {
    "scenario": ScenarioConfig,
    "train": TrainConfig,
    "tracker": TrackerConfig,
    "merge": MergeConfig,
}


def load_config(path) -> RunConfig:
    """Load and validate a YAML run configuration.

    Raises :class:`UnknownKeyError` for unrecognized keys, ``TypeError``
    for mistyped values, and :class:`RangeError` for out-of-range values.
    The error message names the offending key.
    """
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise TypeError("config root must be a mapping")
    return config_from_dict(data)


def config_from_dict(data: dict) -> RunConfig:
    kwargs = {}
    top_fields = {f.name for f in fields(RunConfig)}
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise TypeError(f"{key} must be a mapping")
            kwargs[key] = _build(_SECTIONS[key], key, value)
        elif key in top_fields:
            kwargs[key] = value
        else:
            raise UnknownKeyError(key)
    cfg = RunConfig(**kwargs)
    if cfg.sampling_stride < 1:
        raise RangeError("sampling_stride")
    cfg.scenario.validate()
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    out = {}
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if f.name in _SECTIONS:
            section = {}
            for sf in fields(value):
                v = getattr(value, sf.name)
                if dataclasses.is_dataclass(v):
                    v = dataclasses.asdict(v)
                elif isinstance(v, tuple):
                    v = list(v)
                section[sf.name] = v
            out[f.name] = section
        else:
            out[f.name] = value
    return out
