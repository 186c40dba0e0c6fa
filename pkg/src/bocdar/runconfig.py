"""JSON run configuration for the command line tool."""

import json
from dataclasses import dataclass, field

from .detector import DetectorConfig
from .errors import ConfigError
from .hyperbound import check_hyperparams
from .obsmodel import ObsModelConfig
from .params import Hyperparams

NORMALIZE_METHODS = (None, "minmax")


@dataclass(frozen=True)
class NormalizeConfig:
    method: str | None = None
    y_min: float | None = None
    y_max: float | None = None
    x_min: tuple | None = None
    x_max: tuple | None = None

    def __post_init__(self):
        if self.method not in NORMALIZE_METHODS:
            raise ConfigError(f"normalize.method must be one of {NORMALIZE_METHODS}")
        if self.method == "minmax":
            if self.y_min is None or self.y_max is None or not self.y_max > self.y_min:
                raise ConfigError("minmax normalisation needs y_min < y_max in the config")
            if (self.x_min is None) != (self.x_max is None):
                raise ConfigError("give both x_min and x_max or neither")
            if self.x_min is not None:
                if len(self.x_min) != len(self.x_max):
                    raise ConfigError("x_min and x_max must have equal length")
                if any(not hi > lo for lo, hi in zip(self.x_min, self.x_max)):
                    raise ConfigError("each x_max must exceed x_min")
            object.__setattr__(self, "x_min", None if self.x_min is None else tuple(self.x_min))
            object.__setattr__(self, "x_max", None if self.x_max is None else tuple(self.x_max))

    def apply(self, y, x):
        if self.method is None:
            return y, x
        y = (y - self.y_min) / (self.y_max - self.y_min)
        if x is not None and self.x_min is not None:
            x = [(v - lo) / (hi - lo) for v, lo, hi in zip(x, self.x_min, self.x_max)]
        return y, x

    def to_dict(self):
        return {
            "method": self.method,
            "y_min": self.y_min,
            "y_max": self.y_max,
            "x_min": None if self.x_min is None else list(self.x_min),
            "x_max": None if self.x_max is None else list(self.x_max),
        }


@dataclass(frozen=True)
class RunConfig:
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    obs_model: ObsModelConfig = field(default_factory=ObsModelConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    normalize: NormalizeConfig = field(default_factory=NormalizeConfig)
    io: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d, warn=True):
        known = {"hyperparams", "obs_model", "detector", "normalize", "io"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config sections: {sorted(extra)}")
        try:
            cfg = cls(
                hyperparams=Hyperparams(**d.get("hyperparams", {})),
                obs_model=ObsModelConfig(**d.get("obs_model", {})),
                detector=DetectorConfig(**d.get("detector", {})),
                normalize=NormalizeConfig(**d.get("normalize", {})),
                io=dict(d.get("io", {})),
            )
        except TypeError as exc:  # unknown keys inside a section
            raise ConfigError(str(exc)) from None
        if warn:
            check_hyperparams(cfg.hyperparams, warn=True)
        return cfg

    def to_dict(self):
        return {
            "hyperparams": self.hyperparams.to_dict(),
            "obs_model": self.obs_model.to_dict(),
            "detector": self.detector.to_dict(),
            "normalize": self.normalize.to_dict(),
            "io": dict(self.io),
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path, warn=True):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(d, warn)
