"""Conjugate Gaussian observation models.

Two variants are supported.  ``gaussian-intercept-only`` models each segment
as iid ``N(mu, sigma^2)``; ``gaussian-linear-regression`` models
``y = z . beta + eps`` with design ``z = [1, x]``.  In both cases the prior is
normal-inverse-gamma::

    sigma^2      ~ InvGamma(a0 = v0 / 2, b0 = v0 * sigma0_sq / 2)
    beta | sigma ~ N(0, sigma^2 / k0 * I)

so ``sigma0_sq`` is the prior guess of the noise variance, ``v0`` its degrees
of freedom and ``k0`` the prior precision scale of the coefficients.  The
segment marginal likelihood is then available in closed form.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError, DimensionError

INTERCEPT_ONLY = "gaussian-intercept-only"
REGRESSION = "gaussian-linear-regression"
VARIANTS = (INTERCEPT_ONLY, REGRESSION)
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class ObsModelConfig:
    variant: str = INTERCEPT_ONLY
    sigma0_sq: float = 0.25
    v0: float = 1.0
    k0: float = 0.01
    feature_dim: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        for name in ("sigma0_sq", "v0", "k0"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {val!r}")
        if self.feature_dim < 0:
            raise ConfigError("feature_dim must be nonnegative")
        if (self.feature_dim == 0) != (self.variant == INTERCEPT_ONLY):
            raise ConfigError(
                "feature_dim must be 0 for the intercept-only variant and positive for regression"
            )

    @property
    def a0(self):
        return 0.5 * self.v0

    @property
    def b0(self):
        return 0.5 * self.v0 * self.sigma0_sq

    @property
    def dim(self):
        """Number of regression coefficients, intercept included."""
        return self.feature_dim + 1

    def to_dict(self):
        return {
            "variant": self.variant,
            "sigma0_sq": self.sigma0_sq,
            "v0": self.v0,
            "k0": self.k0,
            "feature_dim": self.feature_dim,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True, eq=False)
class SuffStats:
    """Sufficient statistics of one segment: count, Z'Z, Z'y and y'y."""

    n: int
    zz: np.ndarray
    zy: np.ndarray
    yy: float


def _design(x, cfg):
    if x is None:
        x = ()
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if x.shape[0] != cfg.feature_dim:
        raise DimensionError(
            f"expected {cfg.feature_dim} features, got {x.shape[0]}"
        )
    return np.concatenate(([1.0], x))


def empty_stats(cfg):
    p = cfg.dim
    return SuffStats(0, np.zeros((p, p)), np.zeros(p), 0.0)


def push(stats, y, x=None):
    """Return new stats with observation ``(y, x)`` appended."""
    p = stats.zy.shape[0]
    z = np.concatenate(([1.0], np.atleast_1d(np.asarray(() if x is None else x, float)).ravel()))
    if z.shape[0] != p:
        raise DimensionError(f"expected {p - 1} features, got {z.shape[0] - 1}")
    y = float(y)
    return SuffStats(stats.n + 1, stats.zz + np.outer(z, z), stats.zy + z * y, stats.yy + y * y)


def merge(a, b):
    """Stats of the concatenation of two segments (order does not matter)."""
    if a.zy.shape != b.zy.shape:
        raise DimensionError("cannot merge stats of different dimension")
    return SuffStats(a.n + b.n, a.zz + b.zz, a.zy + b.zy, a.yy + b.yy)


def stats_from(values, features=None, cfg=None):
    cfg = cfg or ObsModelConfig()
    s = empty_stats(cfg)
    for i, y in enumerate(values):
        s = push(s, y, None if features is None else features[i])
    return s


def _log_marginal_arrays(n, zz, zy, yy, cfg):
    """Vectorised closed-form log marginal over a leading batch axis."""
    n = np.asarray(n, dtype=float)
    p = zy.shape[-1]
    lam = zz + cfg.k0 * np.eye(p)
    _, logdet = np.linalg.slogdet(lam)
    mu = np.linalg.solve(lam, zy[..., None])[..., 0]
    a0, b0 = cfg.a0, cfg.b0
    an = a0 + 0.5 * n
    bn = b0 + 0.5 * (yy - np.sum(zy * mu, axis=-1))
    return (
        -0.5 * n * LOG_2PI
        + 0.5 * (p * np.log(cfg.k0) - logdet)
        + a0 * np.log(b0)
        - an * np.log(bn)
        + gammaln(an)
        - gammaln(a0)
    )


def log_marginal(stats, cfg):
    """Log marginal likelihood of the segment summarised by ``stats``."""
    if stats.n == 0:
        return 0.0
    return float(_log_marginal_arrays(stats.n, stats.zz, stats.zy, stats.yy, cfg))


def log_predictive(stats_prev, y, x=None, cfg=None):
    """Log posterior predictive density of ``y`` given the segment so far."""
    cfg = cfg or ObsModelConfig()
    return log_marginal(push(stats_prev, y, x), cfg) - log_marginal(stats_prev, cfg)


@dataclass(frozen=True, eq=False)
class SegmentCache:
    """Scores of every candidate segment ending at time ``t``.

    Entry ``r`` refers to the segment of the last ``r + 1`` observations.
    ``log_marg_prev`` is the ``log_marg`` vector of the previous step, which
    the anomaly-end recursion needs.
    """

    t: int
    n: int
    log_marg: np.ndarray
    log_pred: np.ndarray
    log_marg_prev: np.ndarray
    stats: tuple = field(repr=False)


def _regression_window(stats_prev, y, x, n, cfg):
    z = _design(x, cfg)
    p = z.shape[0]
    zz_prev, zy_prev, yy_prev = stats_prev
    zz = np.empty((n + 1, p, p))
    zy = np.empty((n + 1, p))
    yy = np.empty(n + 1)
    zz[0] = np.outer(z, z)
    zy[0] = z * y
    yy[0] = y * y
    if n > 0:
        zz[1:] = zz_prev[:n] + zz[0]
        zy[1:] = zy_prev[:n] + zy[0]
        yy[1:] = yy_prev[:n] + yy[0]
    cnt = np.arange(1, n + 2)
    return (zz, zy, yy), _log_marginal_arrays(cnt, zz, zy, yy, cfg)


def _empty_window(cfg):
    if cfg.variant == INTERCEPT_ONLY:
        return (np.zeros(0), np.zeros(0))
    p = cfg.dim
    return (np.zeros((0, p, p)), np.zeros((0, p)), np.zeros(0))


def _advance(stats_prev, y, x, n, cfg, kernels):
    if cfg.variant == INTERCEPT_ONLY:
        if x is not None and np.size(x) != 0:
            raise DimensionError("intercept-only model takes no features")
        s1, s2, lm = kernels.intercept_window(
            stats_prev[0], stats_prev[1], float(y), n, cfg.a0, cfg.b0, cfg.k0
        )
        return (s1, s2), lm
    return _regression_window(stats_prev, float(y), x, n, cfg)


def cache_init(y, x, cfg, kernels):
    stats, lm = _advance(_empty_window(cfg), y, x, 0, cfg, kernels)
    return SegmentCache(1, 0, lm, lm.copy(), np.zeros(0), stats)


def cache_step(cache, y, x, n, cfg, kernels):
    """Advance the cache by one observation keeping ``n + 1`` segments."""
    if n > cache.n + 1 or n < 0:
        raise ValueError(f"window can grow by at most one: {cache.n} -> {n}")
    stats, lm = _advance(cache.stats, y, x, n, cfg, kernels)
    lp = lm.copy()
    lp[1:] -= cache.log_marg[:n]
    return SegmentCache(cache.t + 1, n, lm, lp, cache.log_marg, stats)


def cache_truncate(cache, n):
    """Drop segments longer than ``n + 1`` from the cache."""
    if n >= cache.n:
        return cache
    return SegmentCache(
        cache.t,
        n,
        cache.log_marg[: n + 1],
        cache.log_pred[: n + 1],
        cache.log_marg_prev,
        tuple(a[: n + 1] for a in cache.stats),
    )
