"""Streaming detector: engine stepping, anomaly removal loop and alerting.

Indices inside the engines refer to *effective* time, i.e. positions in the
series after detected anomalies have been cut out.  The detector keeps the
mapping back to original time stamps and reports everything in original time.
"""

import time as _time
from dataclasses import asdict, dataclass, field

from .engine_ar import ENDPOINT_MODES, BocdArEngine
from .engine_bocd import BocdEngine
from .errors import ConfigError, HistoryMissError, HorizonError
from .obsmodel import ObsModelConfig
from .params import Hyperparams

ENGINES = ("bocd", "bocd-ar")
CHANGE_POINT = "change_point"
COLLECTIVE = "collective_anomaly"
SPURIOUS = "spurious_anomaly"
EVENT_SCHEMA = 1
PHASES = ("likelihoods", "recursion", "most_recent_change", "anomaly", "change_point")


@dataclass(frozen=True)
class DetectorConfig:
    engine: str = "bocd-ar"
    endpoint_mode: str = "sequential"
    joint_posterior: bool = False
    retain_collective: bool = False
    anomaly_confirm_lag: int = 0
    detect_anomalies: bool = True
    backend: str | None = None

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}")
        if self.endpoint_mode not in ENDPOINT_MODES:
            raise ConfigError(f"endpoint_mode must be one of {ENDPOINT_MODES}")
        if self.engine == "bocd" and (self.endpoint_mode == "joint" or self.joint_posterior):
            raise ConfigError("joint endpoints/posterior are only available for bocd-ar")
        if self.anomaly_confirm_lag < 0:
            raise ConfigError("anomaly_confirm_lag must be nonnegative")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class DetectionEvent:
    kind: str
    start: int
    end: int
    posterior: float
    alert_time: int
    engine: str = "bocd-ar"

    @property
    def location(self):
        return self.start

    @property
    def is_anomaly(self):
        return self.kind != CHANGE_POINT

    def to_record(self, timestamps=None):
        """Plain dict for line-delimited JSON output.

        ``timestamps`` optionally maps original indices to labels (e.g. ISO strings).
        """
        rec = {"schema": EVENT_SCHEMA, "kind": self.kind}
        if self.kind == CHANGE_POINT:
            rec["location"] = self.start
        else:
            rec["interval"] = [self.start, self.end]
        rec["posterior"] = round(float(self.posterior), 12)
        rec["alert_time"] = self.alert_time
        rec["engine"] = self.engine
        if timestamps is not None:
            if self.kind == CHANGE_POINT:
                rec["location_ts"] = timestamps(self.start)
            else:
                rec["interval_ts"] = [timestamps(self.start), timestamps(self.end)]
            rec["alert_ts"] = timestamps(self.alert_time)
        return rec


@dataclass
class SearchRanges:
    """Original time stamps currently inside the change-point window."""

    timestamps: list
    n_a: int
    n_c: int
    removed: list = field(default_factory=list)


def classify_anomaly(start, end, change_loc, delta_t):
    """``collective`` if the interval lies more than ``delta_t`` from the change."""
    if change_loc > end:
        dist = change_loc - end
    elif change_loc < start:
        dist = start - change_loc
    else:
        dist = 0
    return COLLECTIVE if dist > delta_t else SPURIOUS


def make_engine(hp, obs_cfg, cfg):
    if cfg.engine == "bocd":
        return BocdEngine(hp, obs_cfg, cfg.backend)
    return BocdArEngine(
        hp,
        obs_cfg,
        cfg.backend,
        joint=cfg.joint_posterior or cfg.endpoint_mode == "joint",
        endpoint_mode=cfg.endpoint_mode,
    )


class Detector:
    """Runs one engine over a single stream and emits :class:`DetectionEvent`."""

    def __init__(self, hp=None, obs_cfg=None, cfg=None):
        self.hp = hp or Hyperparams()
        self.obs_cfg = obs_cfg or ObsModelConfig()
        self.cfg = cfg or DetectorConfig()
        self.engine = make_engine(self.hp, self.obs_cfg, self.cfg)
        self.horizon = self.hp.u_a + self.hp.delta_t + 3
        self._keep = max(self.horizon, self.hp.u_c + 2) + 1
        # buffer of retained observations (orig_time, y, x); _base is the
        # effective time of _buf[0]
        self._buf = []
        self._base = 1
        self._ckpt = {0: (None, None)}
        self._last_time = None
        self._alerted = []
        self._anomalies = []
        self._spurious_gaps = []
        self.removed = []
        self.events = []
        self.timings = dict.fromkeys(PHASES, 0.0)
        self.n_steps = 0

    # ----------------------------------------------------------- bookkeeping
    @property
    def t(self):
        return self.engine.t

    def orig_time(self, eff):
        i = eff - self._base
        if i < 0 or i >= len(self._buf):
            raise HistoryMissError(f"effective time {eff} no longer buffered")
        return self._buf[i][0]

    def eff_time(self, orig):
        for i, rec in enumerate(self._buf):
            if rec[0] == orig:
                return self._base + i
        raise HistoryMissError(f"original time {orig} is not retained")

    def search_ranges(self):
        st = self.engine.state
        if st is None:
            return SearchRanges([], 0, 0, list(self.removed))
        times = [self.orig_time(e) for e in range(st.t - st.n_c, st.t + 1)]
        return SearchRanges(times, st.n_a, st.n_c, list(self.removed))

    def _checkpoint(self):
        t = self.engine.t
        self._ckpt[t] = self.engine.snapshot()
        old = t - self.horizon
        if old in self._ckpt and old > 0:
            del self._ckpt[old]

    def _trim(self):
        extra = len(self._buf) - self._keep
        if extra > 64:
            del self._buf[:extra]
            self._base += extra

    # -------------------------------------------------------------- removal
    def remove_segment(self, start_eff, end_eff):
        """Cut effective times ``start_eff..end_eff`` and replay the rest.

        The result equals running the engine from scratch on the spliced series.
        """
        if end_eff < start_eff:
            return
        t = self.engine.t
        if start_eff < 1 or end_eff > t:
            raise ValueError(f"interval [{start_eff}, {end_eff}] outside 1..{t}")
        snap = self._ckpt.get(start_eff - 1)
        if snap is None or start_eff - self._base < 0:
            raise HistoryMissError(
                f"no checkpoint before effective time {start_eff}; horizon too short"
            )
        i0 = start_eff - self._base
        tail = self._buf[end_eff - self._base + 1 :]
        del self._buf[i0:]
        for k in [k for k in self._ckpt if k >= start_eff]:
            del self._ckpt[k]
        self.engine.restore(snap)
        for rec in tail:
            self.engine.step(rec[1], rec[2])
            self._buf.append(rec)
            self._checkpoint()

    # ------------------------------------------------------- anomaly loop
    def _anomaly_prob(self, r_star):
        if self.cfg.joint_posterior:
            return self.engine.anomaly_probability_joint(r_star)
        return self.engine.anomaly_probability(r_star)

    def _overlaps_reported(self, a, b):
        return any(not (b < s or a > e) for s, e in self._anomalies)

    def anomaly_loop(self):
        """Detect, locate and remove anomalies until none is found.

        Returns ``(removed, pre_state)`` where ``removed`` lists
        ``(orig_start, orig_end, posterior)`` most recent first.
        """
        removed = []
        pre = None
        for _ in range(self.hp.u_a + 1):
            r_star = self.engine.most_recent_change()
            prob = self._anomaly_prob(r_star)
            if prob is None or prob <= self.hp.lambda_a:
                return removed, pre
            r1, r2 = self.engine.anomaly_endpoints(r_star)
            if r1 + 1 < self.cfg.anomaly_confirm_lag:
                return removed, pre
            end_eff = self.engine.t - r1 - 1
            start_eff = end_eff - r2
            a, b = self.orig_time(start_eff), self.orig_time(end_eff)
            if self._overlaps_reported(a, b):
                return removed, pre
            if pre is None:
                pre = (self.engine.snapshot(), list(self._buf), self._base, dict(self._ckpt))
            self.remove_segment(start_eff, end_eff)
            removed.append((a, b, prob))
        raise HorizonError(f"anomaly loop exceeded {self.hp.u_a} iterations")

    def _classify_and_finalize(self, removed, pre, now):
        st = self.engine.state
        r_star = self.engine.most_recent_change()
        change_loc = self.orig_time(st.t - r_star)
        labelled = [
            (a, b, p, classify_anomaly(a, b, change_loc, self.hp.delta_t))
            for a, b, p in removed
        ]
        if self.cfg.retain_collective and any(k == COLLECTIVE for *_, k in labelled):
            snap, buf, base, ckpt = pre
            self.engine.restore(snap)
            self._buf, self._base, self._ckpt = buf, base, ckpt
            for a, b, _, kind in labelled:
                if kind == SPURIOUS:
                    self.remove_segment(self.eff_time(a), self.eff_time(b))
        events = []
        for a, b, p, kind in labelled:
            self._anomalies.append((a, b))
            if kind == SPURIOUS or not self.cfg.retain_collective:
                self.removed.append((a, b, kind))
            if kind == SPURIOUS:
                self._spurious_gaps.append((a, b))
            events.append(DetectionEvent(kind, a, b, p, now, self.cfg.engine))
        return events

    # ------------------------------------------------------ change points
    def _report_location(self, eff):
        loc = self.orig_time(eff)
        if eff - 1 >= self._base:
            prev = self.orig_time(eff - 1)
            for a, b in self._spurious_gaps:
                if prev < a and b == loc - 1:
                    return a
        return loc

    def confirm_change(self, r_star, now):
        offset, prob = self.engine.change_point(r_star)
        st = self.engine.state
        if prob <= self.hp.lambda_c or offset < self.hp.confirm_lag:
            return None
        eff = st.t - offset
        if eff <= 1:
            return None  # series start is not a change
        if offset == st.n_c and st.t - 1 > st.n_c:
            return None  # mass piled at the window boundary
        loc = self._report_location(eff)
        if any(abs(loc - prev) <= self.hp.delta for prev in self._alerted):
            return None
        self._alerted.append(loc)
        return DetectionEvent(CHANGE_POINT, loc, loc, prob, now, self.cfg.engine)

    # ------------------------------------------------------------- driver
    def process(self, time, value, features=None):
        """Consume one observation; return the events it triggers."""
        time = int(time)
        if self._last_time is not None and time <= self._last_time:
            raise ValueError(
                f"time stamps must increase strictly: {time} after {self._last_time}"
            )
        self._last_time = time
        tm = self.timings
        lik0, rec0 = self.engine.timings["likelihoods"], self.engine.timings["recursion"]
        self.engine.step(float(value), features)
        self._buf.append((time, float(value), features))
        self._checkpoint()
        self._trim()
        tm["likelihoods"] += self.engine.timings["likelihoods"] - lik0
        tm["recursion"] += self.engine.timings["recursion"] - rec0

        c0 = _time.perf_counter()
        r_star = self.engine.most_recent_change()
        c1 = _time.perf_counter()
        events = []
        if self.cfg.detect_anomalies:
            removed, pre = self.anomaly_loop()
            if removed:
                events.extend(self._classify_and_finalize(removed, pre, time))
                r_star = self.engine.most_recent_change()
        c2 = _time.perf_counter()
        ev = self.confirm_change(r_star, time)
        if ev is not None:
            events.append(ev)
        c3 = _time.perf_counter()
        tm["most_recent_change"] += c1 - c0
        tm["anomaly"] += c2 - c1
        tm["change_point"] += c3 - c2
        self.n_steps += 1
        self.events.extend(events)
        return events

    def run(self, values, times=None, features=None):
        """Process a whole series; returns all events."""
        out = []
        for i, y in enumerate(values):
            t = i + 1 if times is None else times[i]
            out.extend(self.process(t, y, None if features is None else features[i]))
        return out
