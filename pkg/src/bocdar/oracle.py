"""Brute-force enumeration of change histories for tiny series.

Every binary change sequence ``c^2..c^T`` is enumerated (``c^1 = 1``).  The
anomaly flags follow from the transition law: when the most recent change was
a change point less than ``delta_t + 1`` steps ago (and not the series start),
a change happens with probability ``q0`` and is necessarily an anomaly end;
otherwise a change happens with probability ``p0`` and starts a normal
segment.  Each history is weighted by its prior probability times the product
of the marginal likelihoods of the segments between consecutive changes.

All engine tables are then sums over the histories consistent with the table
entry, which makes this module the reference the recursions are tested
against.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .logmath import NEG_INF, lse
from .obsmodel import ObsModelConfig, log_marginal, stats_from

MAX_LEN = 12
VARIANTS = ("bocd", "bocd-ar")


@dataclass(frozen=True)
class PathLaw:
    """Transition law of the change history.

    Both variants share one kernel; ``variant`` only selects which tables an
    enumeration is meant to be compared with.
    """

    variant: str = "bocd"
    p0: float = 0.1
    q0: float = 0.2
    delta_t: int = 4

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not (0 < self.p0 < 1 and 0 < self.q0 < 1 and self.delta_t >= 1):
            raise ValueError("invalid law parameters")

    @classmethod
    def from_hp(cls, hp, variant="bocd"):
        return cls(variant, hp.p0, hp.q0, hp.delta_t)


@dataclass(frozen=True)
class History:
    changes: tuple  # (time, is_anomaly_end) pairs, time-ordered, first is (1, False)
    log_prior: float
    log_lik: float

    @property
    def log_weight(self):
        return self.log_prior + self.log_lik


def anomaly_regime(t, last_time, last_is_anom, delta_t):
    """True when a change at ``t`` would have to be an anomaly end."""
    return (not last_is_anom) and last_time != 1 and 1 <= t - last_time <= delta_t


def history_prior(c, law):
    """Prior log probability and the change list of the indicator sequence ``c``.

    ``c[0]`` is time 1 and must be 1.
    """
    lp = 0.0
    changes = [(1, False)]
    for i in range(1, len(c)):
        t = i + 1
        last_t, last_a = changes[-1]
        in_q = anomaly_regime(t, last_t, last_a, law.delta_t)
        prob = law.q0 if in_q else law.p0
        if c[i]:
            lp += np.log(prob)
            changes.append((t, in_q))
        else:
            lp += np.log1p(-prob)
    return lp, tuple(changes)


def _segment_table(y, obs_cfg, features=None):
    T = len(y)
    seg = np.full((T + 1, T + 1), np.nan)
    for i in range(T):
        for j in range(i + 1, T + 1):
            f = None if features is None else features[i:j]
            seg[i, j] = log_marginal(stats_from(y[i:j], f, obs_cfg), obs_cfg)
    return seg


def enumerate_histories(y, law, obs_cfg=None, features=None):
    T = len(y)
    if T < 1:
        raise ValueError("need at least one observation")
    if T > MAX_LEN:
        raise ValueError(f"enumeration limited to {MAX_LEN} points, got {T}")
    obs_cfg = obs_cfg or ObsModelConfig()
    seg = _segment_table(np.asarray(y, float), obs_cfg, features)
    out = []
    for tail in itertools.product((0, 1), repeat=T - 1):
        c = (1,) + tail
        lp, changes = history_prior(c, law)
        starts = [s for s, _ in changes] + [T + 1]
        ll = sum(seg[starts[k] - 1, starts[k + 1] - 1] for k in range(len(changes)))
        out.append(History(changes, lp, float(ll)))
    return out


def most_recent_change_point(changes):
    """Time of the most recent change that is not an anomaly start."""
    for k in range(len(changes) - 1, -1, -1):
        s, is_anom = changes[k]
        if is_anom:
            continue
        nxt = changes[k + 1] if k + 1 < len(changes) else None
        if nxt is None or not nxt[1]:
            return s
    raise AssertionError("history without a change point")


def _lse_dict(d, shape):
    out = np.full(shape, NEG_INF)
    for key, vals in d.items():
        out[key] = lse(vals)
    return out


@dataclass
class OracleResult:
    t: int
    law: PathLaw
    log_wa: np.ndarray
    log_wc: np.ndarray
    log_qc: np.ndarray
    log_ha: np.ndarray
    log_hc: np.ndarray
    log_ga: np.ndarray
    log_evidence: float
    histories: list = field(repr=False)

    @property
    def log_evidence_tables(self):
        return lse(self.log_qc)

    def _masses(self, pred):
        vals = [h.log_weight for h in self.histories if pred(h)]
        return lse(vals)

    def run_length_posterior(self):
        p = np.zeros(self.t)
        for h in self.histories:
            p[self.t - h.changes[-1][0]] += np.exp(h.log_weight - self.log_evidence)
        return p

    def change_point_posterior(self):
        p = np.zeros(self.t)
        for h in self.histories:
            d = self.t - most_recent_change_point(h.changes)
            p[d] += np.exp(h.log_weight - self.log_evidence)
        return p

    def anomaly_conditional(self, r_star):
        """P(most recent change is an anomaly end | run length in the detection window)."""
        lo = max(0, r_star - self.law.delta_t)

        def in_win(h):
            return lo <= self.t - h.changes[-1][0] <= r_star

        den = self._masses(in_win)
        num = self._masses(lambda h: in_win(h) and h.changes[-1][1])
        return 0.0 if num == NEG_INF else float(np.exp(num - den))

    def joint_anomaly_conditional(self, r_star):
        """As above, additionally requiring the anomaly to cover ``r_star`` steps back."""
        lo = max(0, r_star - self.law.delta_t)

        def in_win(h):
            return lo <= self.t - h.changes[-1][0] <= r_star

        def covers(h):
            if not h.changes[-1][1]:
                return False
            start = h.changes[-2][0]
            return start <= self.t - r_star

        den = self._masses(in_win)
        num = self._masses(lambda h: in_win(h) and covers(h))
        return 0.0 if num == NEG_INF else float(np.exp(num - den))


def enumerate_joint(y, law, obs_cfg=None, features=None):
    """Exact tables at time ``len(y)`` by summing over all change histories."""
    hs = enumerate_histories(y, law, obs_cfg, features)
    T = len(y)
    dt = law.delta_t
    wa, wc, ha, hc, ga = {}, {}, {}, {}, {}
    for h in hs:
        w = h.log_weight
        last_t, last_a = h.changes[-1]
        r = T - last_t
        d = T - most_recent_change_point(h.changes)
        if last_a:
            wa.setdefault((d, r), []).append(w)
            ha.setdefault(r, []).append(w)
            k = last_t - 1 - h.changes[-2][0]
            ga.setdefault((r, k), []).append(w)
        else:
            wc.setdefault(d, []).append(w)
            hc.setdefault(r, []).append(w)
    log_wa = _lse_dict(wa, (T, T))
    log_wc = _lse_dict(wc, T)
    log_qc = np.logaddexp(lse(log_wa, axis=1), log_wc)
    return OracleResult(
        t=T,
        law=law,
        log_wa=log_wa,
        log_wc=log_wc,
        log_qc=log_qc,
        log_ha=_lse_dict(ha, T),
        log_hc=_lse_dict(hc, T),
        log_ga=_lse_dict(ga, (T, dt)),
        log_evidence=lse([h.log_weight for h in hs]),
        histories=hs,
    )
