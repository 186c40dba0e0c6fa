"""Detector hyperparameters."""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Hyperparams:
    """Tunables shared by both engines and the detector.

    ``u_a`` and ``u_c`` cap the anomaly and change-point search ranges at
    ``u_a + 1`` and ``u_c + 1`` time points.  ``trunc_mass`` optionally drops
    the tail of the change-point posterior once it carries less than that
    mass, but never shrinks the range below ``min_range_len`` points.
    """

    p0: float = 0.1
    q0: float = 0.2
    delta_t: int = 4
    u_a: int = 27
    u_c: int = 299
    lambda_a: float = 0.5
    lambda_c: float = 0.5
    delta: int = 0
    confirm_lag: int = 5
    trunc_mass: float | None = None
    min_range_len: int | None = None

    def __post_init__(self):
        if not 0.0 < self.p0 < 1.0:
            raise ConfigError(f"p0 must lie in (0, 1), got {self.p0}")
        if not 0.0 < self.q0 < 1.0:
            raise ConfigError(f"q0 must lie in (0, 1), got {self.q0}")
        if int(self.delta_t) != self.delta_t or self.delta_t < 1:
            raise ConfigError("delta_t must be a positive integer")
        if not self.delta_t < self.u_a < self.u_c:
            raise ConfigError(
                f"need delta_t < u_a < u_c, got {self.delta_t}, {self.u_a}, {self.u_c}"
            )
        if self.delta < 0 or self.confirm_lag < 0:
            raise ConfigError("delta and confirm_lag must be nonnegative")
        if self.min_range_len is None:
            object.__setattr__(self, "min_range_len", self.delta_t + 3)
        if self.trunc_mass is not None:
            if not 0.0 < self.trunc_mass < 1.0:
                raise ConfigError("trunc_mass must lie in (0, 1)")
            if self.min_range_len < self.delta_t + 3:
                raise ConfigError("min_range_len must be at least delta_t + 3")

    @property
    def log_probs(self):
        """``[log p0, log(1-p0), log q0, log(1-q0)]`` as a float array."""
        return np.array(
            [np.log(self.p0), np.log1p(-self.p0), np.log(self.q0), np.log1p(-self.q0)]
        )

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        if "delta_t" in kw and "min_range_len" not in kw:
            d["min_range_len"] = None
        return Hyperparams(**d)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)
