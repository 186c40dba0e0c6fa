"""Linear-cost recursion over the run length only.

``log_ha[r]`` is the log joint density of the data and "most recent change is
an anomaly end ``r`` steps ago"; ``log_hc[r]`` the same for a change point.
The optional table ``log_ga[r, k]`` refines ``log_ha[r]`` by the duration
offset ``k`` of the anomaly that ended there (the anomaly lasted ``k + 1``
points).  The time since the most recent change point is approximated by the
run length, which is accurate once detected anomalies are removed.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ._engine_base import EngineBase, head, hist_get, hist_push
from .errors import UnsupportedOperation
from .logmath import NEG_INF, argmax_first, lse, normalize, ratio

ENDPOINT_MODES = ("sequential", "joint")


@dataclass(frozen=True, eq=False)
class BocdArState:
    t: int
    n_a: int
    n_c: int
    log_ha: np.ndarray
    log_hc: np.ndarray
    log_ga: np.ndarray | None = field(default=None, repr=False)
    hc_hist: tuple = field(default=(), repr=False)


def ar_init(cache, hp, joint=False, hist_len=None):
    if cache.t != 1:
        raise ValueError("initial cache must be at time 1")
    hist_len = hist_len or hp.u_a + hp.delta_t + 2
    hc = np.array([float(cache.log_marg[0])])
    return BocdArState(
        t=1,
        n_a=0,
        n_c=0,
        log_ha=np.array([NEG_INF]),
        log_hc=hc,
        log_ga=np.full((1, hp.delta_t), NEG_INF) if joint else None,
        hc_hist=hist_push((), head(hc, hp.delta_t), hist_len),
    )


def ar_step(state, cache, hp, kernels, lp=None, hist_len=None):
    t = state.t + 1
    if cache.t != t:
        raise ValueError(f"cache is at time {cache.t}, state expects {t}")
    if lp is None:
        lp = hp.log_probs
    hist_len = hist_len or hp.u_a + hp.delta_t + 2
    n = cache.n
    n_a = min(n, hp.u_a)
    ha, hc = kernels.ar_tables(
        state.log_ha, state.log_hc, cache.log_pred, t, n, hp.delta_t, lp
    )
    ga = None
    if state.log_ga is not None:
        ga = kernels.g_table(
            state.log_ga, state.log_hc, cache.log_pred, t, n_a, hp.delta_t, lp
        )
    return BocdArState(
        t=t,
        n_a=n_a,
        n_c=n,
        log_ha=ha,
        log_hc=hc,
        log_ga=ga,
        hc_hist=hist_push(state.hc_hist, head(hc, hp.delta_t), hist_len),
    )


def truncate_state(state, k):
    n_a = min(state.n_a, k)
    return replace(
        state,
        n_a=n_a,
        n_c=k,
        log_ha=state.log_ha[: k + 1],
        log_hc=state.log_hc[: k + 1],
        log_ga=None if state.log_ga is None else state.log_ga[: n_a + 1],
    )


def run_length_mass(state):
    return np.logaddexp(state.log_ha, state.log_hc)


def ar_posterior_run_length(state):
    mass = run_length_mass(state)
    return normalize(mass), argmax_first(mass)


def _window(r_star, delta_t):
    return max(0, r_star - delta_t), r_star + 1


def ar_anomaly_posterior_fast(state, r_star, delta_t):
    if r_star > state.n_a:
        return None
    lo, hi = _window(r_star, delta_t)
    den = lse(run_length_mass(state)[lo:hi])
    return ratio(lse(state.log_ha[lo:hi]), den)


def _joint_numerator_terms(state, r_star, delta_t):
    """G cells whose anomaly covers the point ``r_star`` steps back."""
    lo, hi = _window(r_star, delta_t)
    g = state.log_ga
    out = np.full((hi - lo, g.shape[1]), NEG_INF)
    for i, r in enumerate(range(lo, min(hi, g.shape[0]))):
        k0 = max(0, r_star - r - 1)
        out[i, k0:] = g[r, k0:]
    return lo, out


def ar_anomaly_posterior_joint(state, r_star, delta_t):
    if state.log_ga is None:
        raise UnsupportedOperation("joint anomaly posterior needs the G table (joint mode)")
    if r_star > state.n_a:
        return None
    lo, terms = _joint_numerator_terms(state, r_star, delta_t)
    den = lse(run_length_mass(state)[lo : r_star + 1])
    return ratio(lse(terms), den)


def ar_anomaly_endpoints(state, r_star, delta_t, mode="sequential"):
    """MAP ``(r1, r2)``: anomaly ends ``r1 + 1`` steps back and lasts ``r2 + 1`` points."""
    if mode not in ENDPOINT_MODES:
        raise ValueError(f"mode must be one of {ENDPOINT_MODES}")
    lo, hi = _window(r_star, delta_t)
    if mode == "joint":
        if state.log_ga is None:
            raise UnsupportedOperation("joint endpoints need the G table (joint mode)")
        lo, terms = _joint_numerator_terms(state, r_star, delta_t)
        flat = argmax_first(terms.ravel())
        i, r2 = divmod(flat, terms.shape[1])
        return lo + i, r2
    r1 = lo + argmax_first(state.log_ha[lo:hi])
    t_end = state.t - r1 - 1
    vec = hist_get(state.hc_hist, state.t, t_end)
    cap = min(delta_t - 1, t_end - 2)
    if cap < 0:
        raise ValueError(f"no admissible anomaly ending at time {t_end}")
    return r1, argmax_first(vec[: cap + 1])


def ar_change_window_posterior(state, r_star, delta):
    mass = run_length_mass(state)
    lo = max(0, r_star - delta)
    return ratio(lse(mass[lo : r_star + delta + 1]), lse(mass))


class BocdArEngine(EngineBase):
    """Stateful wrapper driving the linear-cost recursion."""

    kind = "bocd-ar"

    def __init__(self, hp=None, obs_cfg=None, backend=None, joint=False,
                 endpoint_mode="sequential"):
        super().__init__(hp, obs_cfg, backend)
        if endpoint_mode not in ENDPOINT_MODES:
            raise ValueError(f"endpoint_mode must be one of {ENDPOINT_MODES}")
        self.joint = joint or endpoint_mode == "joint"
        self.endpoint_mode = endpoint_mode

    def _init(self, cache):
        return ar_init(cache, self.hp, self.joint, self.hist_len)

    def _step(self, state, cache):
        return ar_step(state, cache, self.hp, self.kernels, self.lp, self.hist_len)

    def _truncation_mass(self, state):
        return run_length_mass(state)

    def _truncate(self, state, k):
        return truncate_state(state, k)

    def run_length_posterior(self):
        return ar_posterior_run_length(self.state)

    def most_recent_change(self):
        return argmax_first(run_length_mass(self.state))

    def anomaly_probability(self, r_star):
        return ar_anomaly_posterior_fast(self.state, r_star, self.hp.delta_t)

    def anomaly_probability_joint(self, r_star):
        return ar_anomaly_posterior_joint(self.state, r_star, self.hp.delta_t)

    def anomaly_endpoints(self, r_star):
        return ar_anomaly_endpoints(self.state, r_star, self.hp.delta_t, self.endpoint_mode)

    def change_point(self, r_star=None):
        if r_star is None:
            r_star = self.most_recent_change()
        return r_star, ar_change_window_posterior(self.state, r_star, self.hp.delta)

    def change_posterior(self):
        return ar_posterior_run_length(self.state)[0]
