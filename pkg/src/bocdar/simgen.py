"""Synthetic series with planted change points and anomalies.

``generate_paper_series`` builds the piecewise-constant benchmark design:
normal noise around segment means from a small set, one anomaly per block of
``anomaly_every`` points, and one transitional (spurious) segment that starts
exactly at a change point.  ``sample_generative`` draws from the Bayesian
generative model itself and records the latent change indicators.

All times are 1-based.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .obsmodel import INTERCEPT_ONLY, ObsModelConfig

COLLECTIVE = "collective"
SPURIOUS = "spurious"


@dataclass(frozen=True)
class Anomaly:
    start: int
    end: int
    kind: str = COLLECTIVE
    shift: float = 0.0

    @property
    def duration(self):
        return self.end - self.start + 1


@dataclass(frozen=True)
class PaperSimConfig:
    T: int = 1000
    change_points: tuple = (75, 175, 300, 450, 625, 825)
    means: tuple = (2.0, 4.0, 6.0, 8.0)
    noise_sd: float = 0.5
    anomaly_every: int = 100
    anomaly_offset: int = 52
    anomaly_durations: tuple = (1, 4)
    anomaly_shifts: tuple = (-4.0, -2.0, 2.0, 4.0)
    spurious_at: int | None = 300
    spurious_duration: int = 4
    guard: int = 10
    n_anomalies: int | None = None

    def __post_init__(self):
        cps = tuple(self.change_points)
        if any(b <= a for a, b in zip(cps, cps[1:])) or (cps and (cps[0] < 2 or cps[-1] > self.T)):
            raise ConfigError("change points must be strictly increasing inside 2..T")
        if len(set(self.means)) < 2 and cps:
            raise ConfigError("need at least two distinct means when there are change points")
        if self.spurious_at is not None and self.spurious_at not in cps:
            raise ConfigError("spurious_at must be one of the change points")
        if self.noise_sd <= 0:
            raise ConfigError("noise_sd must be positive")

    @classmethod
    def for_length(cls, T, **kw):
        """Default design cut to ``T`` points: later change points are dropped."""
        base = cls(**kw)
        cps = tuple(c for c in base.change_points if c <= T)
        spur = base.spurious_at if base.spurious_at in cps else None
        return cls(**{**kw, "T": T, "change_points": cps, "spurious_at": spur})

    def to_dict(self):
        return asdict(self)


@dataclass
class SimSeries:
    values: np.ndarray
    change_points: tuple
    anomalies: list
    seed: int | None = None
    segment_means: tuple = ()
    features: np.ndarray | None = field(default=None, repr=False)

    @property
    def T(self):
        return len(self.values)

    @property
    def collective(self):
        return [a for a in self.anomalies if a.kind == COLLECTIVE]

    @property
    def spurious(self):
        return [a for a in self.anomalies if a.kind == SPURIOUS]

    def truth_dict(self):
        return {
            "T": int(self.T),
            "seed": self.seed,
            "change_points": [int(c) for c in self.change_points],
            "anomalies": [
                {"start": a.start, "end": a.end, "kind": a.kind, "shift": a.shift}
                for a in self.anomalies
            ],
            "segment_means": [float(m) for m in self.segment_means],
        }

    @classmethod
    def from_truth(cls, values, truth):
        return cls(
            values=np.asarray(values, dtype=float),
            change_points=tuple(truth["change_points"]),
            anomalies=[Anomaly(**a) for a in truth["anomalies"]],
            seed=truth.get("seed"),
            segment_means=tuple(truth.get("segment_means", ())),
        )

    def truth_json(self):
        return json.dumps(self.truth_dict(), indent=2)


def _draw_means(rng, n, means):
    out = [rng.choice(means)]
    for _ in range(n - 1):
        out.append(rng.choice([m for m in means if m != out[-1]]))
    return out


def _plant_starts(cfg):
    """Nominal anomaly start per block, moved clear of change points."""
    starts = []
    n_blocks = cfg.n_anomalies
    if n_blocks is None:
        n_blocks = (cfg.T - cfg.anomaly_offset - 1) // cfg.anomaly_every + 1
    for k in range(n_blocks):
        s = k * cfg.anomaly_every + cfg.anomaly_offset
        if s > cfg.T:
            break
        starts.append(s)
    return starts


def generate_paper_series(cfg=None, seed=0):
    """Benchmark series with change points, collective anomalies and one spurious segment."""
    cfg = cfg or PaperSimConfig()
    rng = np.random.default_rng(seed)
    cps = list(cfg.change_points)
    means = _draw_means(rng, len(cps) + 1, list(cfg.means))
    bounds = [1] + cps + [cfg.T + 1]
    level = np.empty(cfg.T)
    for i in range(len(means)):
        level[bounds[i] - 1 : bounds[i + 1] - 1] = means[i]
    base = level.copy()
    anomalies = []

    spur_block = None
    if cfg.spurious_at is not None:
        spur_block = (cfg.spurious_at - 1) // cfg.anomaly_every
    max_dur = max(cfg.anomaly_durations)
    for s in _plant_starts(cfg):
        block = (s - 1) // cfg.anomaly_every
        if block == spur_block:
            continue
        dur = int(rng.choice(cfg.anomaly_durations))
        shift = float(rng.choice(cfg.anomaly_shifts))
        for c in cps:
            if s - cfg.guard <= c <= s + max_dur - 1 + cfg.guard:
                s = c + cfg.guard + 1
        e = s + dur - 1
        if e > cfg.T:
            continue
        level[s - 1 : e] = base[s - 1] + shift
        anomalies.append(Anomaly(s, e, COLLECTIVE, shift))

    if cfg.spurious_at is not None:
        s = cfg.spurious_at
        e = min(cfg.T, s + cfg.spurious_duration - 1)
        j = cps.index(s)
        old, new = means[j], means[j + 1]
        options = [d for d in cfg.anomaly_shifts if new + d != old]
        if not options:
            raise ConfigError("no shift keeps the transitional level distinct")
        shift = float(rng.choice(options))
        level[s - 1 : e] = new + shift
        anomalies.append(Anomaly(s, e, SPURIOUS, shift))

    anomalies.sort(key=lambda a: a.start)
    values = level + rng.normal(0.0, cfg.noise_sd, cfg.T)
    return SimSeries(values, tuple(cps), anomalies, seed, tuple(float(m) for m in means))


def generate_single_anomaly_series(shift, duration=4, T=200, start=100, noise_sd=0.5,
                                   mean=4.0, seed=0):
    """Flat series with one collective anomaly, for signal-to-noise sweeps.

    This is a generic sweep design, not a reproduction of any published one.
    """
    rng = np.random.default_rng(seed)
    level = np.full(T, mean)
    level[start - 1 : start - 1 + duration] += shift
    values = level + rng.normal(0.0, noise_sd, T)
    return SimSeries(values, (), [Anomaly(start, start + duration - 1, COLLECTIVE, shift)],
                     seed, (mean,))


# ---------------------------------------------------------------- generative
@dataclass
class GenerativeSample:
    values: np.ndarray
    c: np.ndarray
    a: np.ndarray
    theta: list
    features: np.ndarray | None = None

    def to_series(self, seed=None):
        T = len(self.values)
        cps = []
        anomalies = []
        times = [t for t in range(1, T + 1) if self.c[t - 1]]
        for k, t in enumerate(times):
            if self.a[t - 1]:
                anomalies.append(Anomaly(times[k - 1], t - 1, COLLECTIVE, 0.0))
            elif t > 1 and not (k + 1 < len(times) and self.a[times[k + 1] - 1]):
                cps.append(t)
        return SimSeries(self.values, tuple(cps), anomalies, seed, (), self.features)


def sample_changes(p0, q0, delta_t, T, rng):
    """Draw change indicators ``c`` and anomaly flags ``a`` from the prior."""
    c = np.zeros(T, dtype=np.int8)
    a = np.zeros(T, dtype=np.int8)
    c[0] = 1
    last_t, last_a = 1, False
    u = rng.random(T)
    for t in range(2, T + 1):
        regime_q = (not last_a) and last_t != 1 and t - last_t <= delta_t
        if u[t - 1] < (q0 if regime_q else p0):
            c[t - 1] = 1
            a[t - 1] = 1 if regime_q else 0
            last_t, last_a = t, regime_q
    return c, a


def _draw_theta(rng, obs_cfg):
    sigma2 = 1.0 / rng.gamma(obs_cfg.a0, 1.0 / obs_cfg.b0)
    beta = rng.normal(0.0, np.sqrt(sigma2 / obs_cfg.k0), obs_cfg.dim)
    return beta, sigma2


def sample_generative(hp, obs_cfg=None, T=100, seed=0):
    """Sample a series together with its latent change/anomaly/parameter trace.

    Parameters are redrawn from the prior at every change point and at every
    anomaly start; at an anomaly end they revert to the values in force just
    before the anomaly started.
    """
    obs_cfg = obs_cfg or ObsModelConfig()
    rng = np.random.default_rng(seed)
    c, a = sample_changes(hp.p0, hp.q0, hp.delta_t, T, rng)
    features = None
    if obs_cfg.variant != INTERCEPT_ONLY:
        features = rng.normal(0.0, 1.0, (T, obs_cfg.feature_dim))
    thetas = []
    before_start = None
    cur = _draw_theta(rng, obs_cfg)
    for t in range(1, T + 1):
        if t > 1 and c[t - 1]:
            if a[t - 1]:
                cur = before_start
            else:
                before_start = cur
                cur = _draw_theta(rng, obs_cfg)
        thetas.append(cur)
    values = np.empty(T)
    for t in range(T):
        beta, sigma2 = thetas[t]
        z = np.concatenate(([1.0], features[t])) if features is not None else np.ones(1)
        values[t] = float(np.dot(z, beta)) + rng.normal(0.0, np.sqrt(sigma2))
    return GenerativeSample(values, c, a, thetas, features)
