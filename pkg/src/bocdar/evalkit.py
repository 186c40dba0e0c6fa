"""Event matching, detection metrics, the BOCPD baseline and benchmark runs.

Matching conventions
--------------------
* A change-point alert matches a true change point within ``tol_c`` steps.
  When the true change starts with a transitional (spurious) segment, any
  location inside ``[c, c + duration]`` also matches, because the new regime
  only settles after the transition.
* A collective-anomaly alert matches a true collective anomaly when the
  intervals overlap.  Spurious-anomaly events are internal classifications
  and are not scored as anomaly alerts.
* Matching is one-to-one and greedy in alert order (earliest alert wins).
* ``false_positive_rate`` for a kind is the fraction of true changes of the
  *other* kind that an unmatched alert of this kind landed on.
* Delay is ``alert_time - reference`` with the change location as reference
  for change points and the first point after the anomaly for anomalies.
  ``excess`` delay subtracts the change-point confirmation lag (for both
  kinds) and floors at zero.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import obsmodel
from .detector import CHANGE_POINT, COLLECTIVE, PHASES, DetectionEvent, Detector, DetectorConfig
from .kernels import get_kernels
from .logmath import argmax_first, lse, normalize, ratio
from .obsmodel import ObsModelConfig
from .params import Hyperparams
from .simgen import PaperSimConfig, generate_paper_series

KINDS = ("change_point", "anomaly")


# ------------------------------------------------------------------ matching
@dataclass
class Matching:
    cp_pairs: list = field(default_factory=list)      # (event, true location)
    an_pairs: list = field(default_factory=list)      # (event, Anomaly)
    cp_fp: list = field(default_factory=list)
    an_fp: list = field(default_factory=list)
    cp_fn: list = field(default_factory=list)
    an_fn: list = field(default_factory=list)
    n_true_cp: int = 0
    n_true_an: int = 0
    n_cp_as_anomaly: int = 0   # true change points hit by unmatched anomaly alerts
    n_anomaly_as_cp: int = 0   # true anomalies hit by unmatched change alerts


def _cp_extent(c, spurious, tol):
    lo, hi = c - tol, c + tol
    for a in spurious:
        if a.start == c:
            hi = max(hi, a.end + 1)
    return lo, hi


def match_events(truth, events, tol_c=0, tol_a=None, delta_t=4):
    """Match detections to ground truth.  ``truth`` is a :class:`SimSeries`."""
    if tol_a is None:
        tol_a = delta_t
    events = sorted(events, key=lambda e: (e.alert_time, e.start))
    spur = truth.spurious
    cps = list(truth.change_points)
    extents = {c: _cp_extent(c, spur, tol_c) for c in cps}
    anoms = truth.collective
    m = Matching(n_true_cp=len(cps), n_true_an=len(anoms))
    free_cp = set(cps)
    free_an = set(range(len(anoms)))
    for ev in events:
        if ev.kind == CHANGE_POINT:
            cands = [c for c in free_cp if extents[c][0] <= ev.start <= extents[c][1]]
            if cands:
                c = min(cands, key=lambda c: (abs(ev.start - c), c))
                free_cp.remove(c)
                m.cp_pairs.append((ev, c))
            else:
                m.cp_fp.append(ev)
        elif ev.kind == COLLECTIVE:
            cands = [i for i in free_an if not (ev.end < anoms[i].start or ev.start > anoms[i].end)]
            if cands:
                i = min(cands, key=lambda i: (abs(ev.start - anoms[i].start), i))
                free_an.remove(i)
                m.an_pairs.append((ev, anoms[i]))
            else:
                m.an_fp.append(ev)
    m.cp_fn = sorted(free_cp)
    m.an_fn = [anoms[i] for i in sorted(free_an)]

    hit = set()
    for ev in m.an_fp:
        for c in cps:
            lo, hi = extents[c]
            if ev.start - tol_a <= hi and ev.end + tol_a >= lo:
                hit.add(c)
    m.n_cp_as_anomaly = len(hit)
    hit = set()
    for ev in m.cp_fp:
        for i, a in enumerate(anoms):
            if a.start <= ev.start <= a.end + 1:
                hit.add(i)
    m.n_anomaly_as_cp = len(hit)
    return m


def detection_delays(matching, confirm_lag=0):
    """Raw and excess delays per kind as lists."""
    cp_raw = [ev.alert_time - c for ev, c in matching.cp_pairs]
    an_raw = [ev.alert_time - (a.end + 1) for ev, a in matching.an_pairs]
    return {
        "change_point": (cp_raw, [max(0, d - confirm_lag) for d in cp_raw]),
        "anomaly": (an_raw, [max(0, d - confirm_lag) for d in an_raw]),
    }


def detection_delay(matching, kind="change_point", confirm_lag=0):
    raw, _ = detection_delays(matching, confirm_lag)[kind]
    return float(np.mean(raw)) if raw else float("nan")


# ------------------------------------------------------------------- metrics
@dataclass
class KindMetrics:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    n_true: int = 0
    n_other_true: int = 0
    confusions: int = 0
    delay_sum: float = 0.0
    excess_delay_sum: float = 0.0

    @property
    def n_detected(self):
        return self.tp + self.fp

    @property
    def precision_defined(self):
        return self.n_detected > 0

    @property
    def precision(self):
        return self.tp / self.n_detected if self.n_detected else 0.0

    @property
    def recall(self):
        return self.tp / self.n_true if self.n_true else 0.0

    @property
    def f1(self):
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    @property
    def false_positive_rate(self):
        return self.confusions / self.n_other_true if self.n_other_true else 0.0

    @property
    def mean_delay(self):
        return self.delay_sum / self.tp if self.tp else float("nan")

    @property
    def mean_excess_delay(self):
        return self.excess_delay_sum / self.tp if self.tp else float("nan")

    def add(self, other):
        for k in ("tp", "fp", "fn", "n_true", "n_other_true", "confusions"):
            setattr(self, k, getattr(self, k) + getattr(other, k))
        self.delay_sum += other.delay_sum
        self.excess_delay_sum += other.excess_delay_sum

    def summary(self):
        return {
            "precision": self.precision,
            "precision_defined": self.precision_defined,
            "recall": self.recall,
            "f1": self.f1,
            "false_positive_rate": self.false_positive_rate,
            "mean_delay": self.mean_delay,
            "mean_excess_delay": self.mean_excess_delay,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "confusions": self.confusions,
        }


@dataclass
class MetricsReport:
    change_point: KindMetrics = field(default_factory=KindMetrics)
    anomaly: KindMetrics = field(default_factory=KindMetrics)
    n_series: int = 0

    def add(self, other):
        self.change_point.add(other.change_point)
        self.anomaly.add(other.anomaly)
        self.n_series += other.n_series

    def to_dict(self):
        return {
            "n_series": self.n_series,
            "change_point": self.change_point.summary(),
            "anomaly": self.anomaly.summary(),
        }


def evaluate(truth, events, tol_c=0, tol_a=None, delta_t=4, confirm_lag=0):
    """Metrics of one series; ``confirm_lag`` only affects the excess delay."""
    m = match_events(truth, events, tol_c, tol_a, delta_t)
    delays = detection_delays(m, confirm_lag)
    cp = KindMetrics(
        tp=len(m.cp_pairs), fp=len(m.cp_fp), fn=len(m.cp_fn), n_true=m.n_true_cp,
        n_other_true=m.n_true_an, confusions=m.n_anomaly_as_cp,
        delay_sum=float(sum(delays["change_point"][0])),
        excess_delay_sum=float(sum(delays["change_point"][1])),
    )
    an = KindMetrics(
        tp=len(m.an_pairs), fp=len(m.an_fp), fn=len(m.an_fn), n_true=m.n_true_an,
        n_other_true=m.n_true_cp, confusions=m.n_cp_as_anomaly,
        delay_sum=float(sum(delays["anomaly"][0])),
        excess_delay_sum=float(sum(delays["anomaly"][1])),
    )
    return MetricsReport(cp, an, 1)


# -------------------------------------------------------------------- BOCPD
@dataclass(frozen=True, eq=False)
class BocpdState:
    t: int
    n: int
    log_rl: np.ndarray


def bocpd_init(cache):
    return BocpdState(1, 0, np.array([float(cache.log_marg[0])]))


def bocpd_step(state, cache, hazard, kernels=None):
    """Run-length recursion with constant hazard; a change at ``t`` starts a new segment at ``t``."""
    kernels = kernels or get_kernels()
    if cache.t != state.t + 1:
        raise ValueError("cache/state time mismatch")
    rl = kernels.bocpd_tables(
        state.log_rl, cache.log_pred, cache.n, float(np.log(hazard)), float(np.log1p(-hazard))
    )
    return BocpdState(cache.t, cache.n, rl)


def bocpd_posterior(state):
    return normalize(state.log_rl), argmax_first(state.log_rl)


class BocpdDetector:
    """Change-point-only baseline with the same alerting rules as :class:`Detector`."""

    def __init__(self, hp=None, obs_cfg=None, backend=None):
        self.hp = hp or Hyperparams()
        self.obs_cfg = obs_cfg or ObsModelConfig()
        self.kernels = get_kernels(backend)
        self.state = None
        self.cache = None
        self.times = []
        self._alerted = []
        self.events = []
        self.timings = dict.fromkeys(PHASES, 0.0)
        self.n_steps = 0

    def process(self, time_, value, features=None):
        t0 = time.perf_counter()
        if self.state is None:
            self.cache = obsmodel.cache_init(value, features, self.obs_cfg, self.kernels)
            t1 = time.perf_counter()
            self.state = bocpd_init(self.cache)
        else:
            n = min(self.state.t, self.hp.u_c)
            self.cache = obsmodel.cache_step(
                self.cache, value, features, n, self.obs_cfg, self.kernels
            )
            t1 = time.perf_counter()
            self.state = bocpd_step(self.state, self.cache, self.hp.p0, self.kernels)
        t2 = time.perf_counter()
        self.times.append(int(time_))
        st = self.state
        rl = st.log_rl
        r_star = argmax_first(rl)
        t3 = time.perf_counter()
        lo = max(0, r_star - self.hp.delta)
        prob = ratio(lse(rl[lo : r_star + self.hp.delta + 1]), lse(rl))
        out = []
        eff = st.t - r_star
        if (
            prob > self.hp.lambda_c
            and r_star >= self.hp.confirm_lag
            and eff > 1
            and not (r_star == st.n and st.t - 1 > st.n)
        ):
            loc = self.times[eff - 1]
            if not any(abs(loc - p) <= self.hp.delta for p in self._alerted):
                self._alerted.append(loc)
                out.append(DetectionEvent(CHANGE_POINT, loc, loc, prob, int(time_), "bocpd"))
        t4 = time.perf_counter()
        tm = self.timings
        tm["likelihoods"] += t1 - t0
        tm["recursion"] += t2 - t1
        tm["most_recent_change"] += t3 - t2
        tm["change_point"] += t4 - t3
        self.n_steps += 1
        self.events.extend(out)
        return out

    def run(self, values, times=None):
        out = []
        for i, y in enumerate(values):
            out.extend(self.process(i + 1 if times is None else times[i], y))
        return out


# ---------------------------------------------------------------- benchmark
@dataclass
class BenchmarkResult:
    report: MetricsReport
    engine: str
    runtime_total: float
    runtime_per_series: list
    phase_seconds: dict
    n_steps: int

    def phase_per_step_ms(self):
        return {k: 1e3 * v / max(self.n_steps, 1) for k, v in self.phase_seconds.items()}

    def to_dict(self):
        return {
            "engine": self.engine,
            "metrics": self.report.to_dict(),
            "runtime_total_s": self.runtime_total,
            "runtime_mean_per_series_s": float(np.mean(self.runtime_per_series))
            if self.runtime_per_series else 0.0,
            "phase_ms_per_step": self.phase_per_step_ms(),
        }


def make_detector(engine, hp, obs_cfg=None, det_cfg=None):
    if engine == "bocpd":
        return BocpdDetector(hp, obs_cfg, None if det_cfg is None else det_cfg.backend)
    base = det_cfg or DetectorConfig()
    cfg = DetectorConfig(**{**asdict(base), "engine": engine})
    return Detector(hp, obs_cfg, cfg)


def _run_one(args):
    engine, hp, obs_cfg, det_cfg, sim_cfg, seed, tol_c = args
    series = generate_paper_series(sim_cfg, seed)
    det = make_detector(engine, hp, obs_cfg, det_cfg)
    t0 = time.perf_counter()
    events = det.run(series.values)
    elapsed = time.perf_counter() - t0
    rep = evaluate(series, events, tol_c=tol_c, delta_t=hp.delta_t,
                   confirm_lag=hp.confirm_lag)
    return rep, elapsed, dict(det.timings), det.n_steps


def run_benchmark(n_series, hp=None, engine="bocd-ar", obs_cfg=None, det_cfg=None,
                  sim_cfg=None, seed0=0, workers=1, tol_c=None):
    """Run ``engine`` over ``n_series`` generated series and aggregate metrics."""
    if n_series < 1:
        raise ValueError("n_series must be at least 1")
    hp = hp or Hyperparams()
    sim_cfg = sim_cfg or PaperSimConfig()
    tol_c = hp.delta if tol_c is None else tol_c
    jobs = [(engine, hp, obs_cfg, det_cfg, sim_cfg, seed0 + i, tol_c) for i in range(n_series)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    report = MetricsReport()
    phases = dict.fromkeys(PHASES, 0.0)
    per_series = []
    steps = 0
    for rep, elapsed, tm, n in results:
        report.add(rep)
        per_series.append(elapsed)
        steps += n
        for k, v in tm.items():
            phases[k] += v
    return BenchmarkResult(report, engine, float(sum(per_series)), per_series, phases, steps)


def format_report(result):
    """Plain-text table of metrics and per-step phase timings."""
    r = result.report
    lines = [f"engine: {result.engine}   series: {r.n_series}", ""]
    lines.append(f"{'kind':<14}{'prec':>8}{'recall':>8}{'f1':>8}{'fpr':>8}{'delay':>8}{'excess':>8}")
    for name in KINDS:
        k = getattr(r, name)
        flag = "" if k.precision_defined else "*"
        lines.append(
            f"{name:<14}{k.precision:>7.3f}{flag:1}{k.recall:>8.3f}{k.f1:>8.3f}"
            f"{k.false_positive_rate:>8.3f}{k.mean_delay:>8.3f}{k.mean_excess_delay:>8.3f}"
        )
    lines.append("")
    lines.append(f"total runtime: {result.runtime_total:.3f} s")
    for k, v in result.phase_per_step_ms().items():
        lines.append(f"  {k:<20}{v:>10.4f} ms/step")
    return "\n".join(lines)



# ------------------------------------------------------------------ scaling
def stream_run(engine, values, hp, obs_cfg=None):
    """MAP run length and anomaly probability per step from the compiled stream loop."""
    from .kernels import _stream

    obs_cfg = obs_cfg or ObsModelConfig()
    fn = _stream.ar_stream if engine == "bocd-ar" else _stream.bocd_stream
    return fn(np.asarray(values, dtype=float), obs_cfg.a0, obs_cfg.b0, obs_cfg.k0,
              hp.delta_t, hp.u_a, hp.u_c, hp.log_probs)


def measure_step_time(engine, u_c, n_steps=400, repeats=7, seed=0, hp=None, backend=None):
    """Median steady-state seconds per step with a full window of ``u_c + 1`` points.

    With the numba backend the compiled stream loop is timed: the cost of the
    first ``u_c + 1`` steps is subtracted from a run ``n_steps`` longer.  With
    the numpy backend each engine step is timed individually.
    """
    from ._backend import default_backend_name

    hp = (hp or Hyperparams()).replace(u_c=u_c, u_a=min((hp or Hyperparams()).u_a, u_c - 1))
    backend = backend or default_backend_name()
    rng = np.random.default_rng(seed)
    y = rng.normal(4.0, 0.5, u_c + 1 + n_steps)
    if backend == "numba":
        stream_run(engine, y[:10], hp)  # compile
        per = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            stream_run(engine, y[: u_c + 1], hp)
            t1 = time.perf_counter()
            stream_run(engine, y, hp)
            t2 = time.perf_counter()
            per.append(((t2 - t1) - (t1 - t0)) / n_steps)
        return float(np.median(per))
    from .engine_ar import BocdArEngine
    from .engine_bocd import BocdEngine

    cls = BocdArEngine if engine == "bocd-ar" else BocdEngine
    eng = cls(hp, backend=backend)
    for v in y[: u_c + 1]:
        eng.step(v)
    ts = []
    for v in y[u_c + 1 :]:
        t0 = time.perf_counter()
        eng.step(v)
        ts.append(time.perf_counter() - t0)
    return float(np.median(ts))


def loglog_slope(sizes, times):
    return float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
