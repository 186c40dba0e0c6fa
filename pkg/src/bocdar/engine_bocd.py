"""Exact quadratic-cost joint recursion over (time since change point, run length).

Tables live in the log domain.  ``log_wa[d, r]`` is the joint density of the
data and the event "most recent change point ``d`` steps ago, most recent
change (an anomaly end) ``r`` steps ago"; ``log_wc[d]`` covers "most recent
change is the change point ``d`` steps ago" and ``log_qc[d]`` marginalises the
two.  The anomaly table is stored as a dense square padded with ``-inf``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ._engine_base import EngineBase, head, hist_get, hist_push
from .logmath import NEG_INF, argmax_first, lse, normalize, ratio


def r_max(t, d, delta_t):
    """Largest admissible run length plus one for a change point ``d`` steps back."""
    if d == t - 1:
        return d - 1
    return d - delta_t - 1


def a_max(t, d, delta_t):
    """Largest admissible anomaly-duration offset for an anomaly ending now."""
    return min(delta_t - 1, r_max(t, d, delta_t) - 1)


@dataclass(frozen=True, eq=False)
class BocdState:
    t: int
    n_a: int
    n_c: int
    log_wa: np.ndarray
    log_wc: np.ndarray
    log_qc: np.ndarray
    q_hist: np.ndarray = field(repr=False)
    wc_hist: tuple = field(repr=False)


def bocd_init(cache, hp, hist_len=None):
    if cache.t != 1:
        raise ValueError("initial cache must be at time 1")
    hist_len = hist_len or hp.u_a + hp.delta_t + 2
    l1 = float(cache.log_marg[0])
    wc = np.array([l1])
    q_hist = np.full((hp.delta_t + 1, hp.u_c + 1), NEG_INF)
    q_hist[0, 0] = l1
    return BocdState(
        t=1,
        n_a=0,
        n_c=0,
        log_wa=np.full((1, 1), NEG_INF),
        log_wc=wc,
        log_qc=wc.copy(),
        q_hist=q_hist,
        wc_hist=hist_push((), head(wc, hp.delta_t), hist_len),
    )


def bocd_step(state, cache, hp, kernels, lp=None, hist_len=None):
    """Advance the tables by one observation whose scores are in ``cache``."""
    t = state.t + 1
    if cache.t != t:
        raise ValueError(f"cache is at time {cache.t}, state expects {t}")
    if lp is None:
        lp = hp.log_probs
    hist_len = hist_len or hp.u_a + hp.delta_t + 2
    n = cache.n
    wa, wc, q = kernels.bocd_tables(
        state.log_wa,
        state.log_wc,
        state.q_hist,
        cache.log_pred,
        cache.log_marg_prev,
        t,
        n,
        hp.delta_t,
        lp,
    )
    q_hist = np.full_like(state.q_hist, NEG_INF)
    q_hist[1:] = state.q_hist[:-1]
    q_hist[0, : n + 1] = q
    return BocdState(
        t=t,
        n_a=min(n, hp.u_a),
        n_c=n,
        log_wa=wa,
        log_wc=wc,
        log_qc=q,
        q_hist=q_hist,
        wc_hist=hist_push(state.wc_hist, head(wc, hp.delta_t), hist_len),
    )


def truncate_state(state, k):
    q_hist = state.q_hist.copy()
    q_hist[0, k + 1 :] = NEG_INF
    return replace(
        state,
        n_a=min(state.n_a, k),
        n_c=k,
        log_wa=state.log_wa[: k + 1, : k + 1],
        log_wc=state.log_wc[: k + 1],
        log_qc=state.log_qc[: k + 1],
        q_hist=q_hist,
    )


def _wa_cols(state, kernels=None):
    if kernels is not None:
        return kernels.wa_columns(state.log_wa)
    return lse(state.log_wa, axis=0)


def run_length_mass(state, kernels=None):
    """Unnormalised log posterior of the run length."""
    return np.logaddexp(_wa_cols(state, kernels), state.log_wc)


def posterior_run_length(state, kernels=None):
    """Return ``(probabilities over r, MAP r)``."""
    mass = run_length_mass(state, kernels)
    return normalize(mass), argmax_first(mass)


def posterior_change_point(state):
    """Posterior over the time since the most recent change point."""
    return normalize(state.log_qc)


def anomaly_ratio(log_a_w, log_c_w):
    """Probability the windowed mass belongs to anomaly-end histories."""
    return ratio(log_a_w, np.logaddexp(log_a_w, log_c_w))


def anomaly_posterior(state, r_star, delta_t, wa_cols=None):
    """Anomaly probability for the change ``r_star`` steps back, or None if out of range."""
    if r_star > state.n_a:
        return None
    if wa_cols is None:
        wa_cols = _wa_cols(state)
    lo = max(0, r_star - delta_t)
    return anomaly_ratio(lse(wa_cols[lo : r_star + 1]), lse(state.log_wc[lo : r_star + 1]))


def anomaly_endpoints_sequential(state, r_star, delta_t, wa_cols=None):
    """MAP ``(r1, r2)``: anomaly ends ``r1 + 1`` steps back and lasts ``r2 + 1`` points."""
    if wa_cols is None:
        wa_cols = _wa_cols(state)
    lo = max(0, r_star - delta_t)
    r1 = lo + argmax_first(wa_cols[lo : r_star + 1])
    t_end = state.t - r1 - 1
    vec = hist_get(state.wc_hist, state.t, t_end)
    cap = min(delta_t - 1, t_end - 2)
    if cap < 0:
        raise ValueError(f"no admissible anomaly ending at time {t_end}")
    return r1, argmax_first(vec[: cap + 1])


def map_change_point(state, delta):
    """Return ``(d*, windowed posterior mass within delta of d*)``."""
    q = state.log_qc
    d_star = argmax_first(q)
    lo = max(0, d_star - delta)
    return d_star, ratio(lse(q[lo : d_star + delta + 1]), lse(q))


class BocdEngine(EngineBase):
    """Stateful wrapper driving the exact recursion one observation at a time."""

    kind = "bocd"

    def _init(self, cache):
        return bocd_init(cache, self.hp, self.hist_len)

    def _step(self, state, cache):
        return bocd_step(state, cache, self.hp, self.kernels, self.lp, self.hist_len)

    def _truncation_mass(self, state):
        return state.log_qc

    def _truncate(self, state, k):
        return truncate_state(state, k)

    def _cols(self):
        st = self.state
        if getattr(self, "_cols_t", None) is not st:
            self._cols_val = self.kernels.wa_columns(st.log_wa)
            self._cols_t = st
        return self._cols_val

    def run_length_posterior(self):
        mass = np.logaddexp(self._cols(), self.state.log_wc)
        return normalize(mass), argmax_first(mass)

    def most_recent_change(self):
        return argmax_first(np.logaddexp(self._cols(), self.state.log_wc))

    def anomaly_probability(self, r_star):
        return anomaly_posterior(self.state, r_star, self.hp.delta_t, self._cols())

    def anomaly_endpoints(self, r_star):
        return anomaly_endpoints_sequential(self.state, r_star, self.hp.delta_t, self._cols())

    def change_point(self, r_star=None):
        """``(offset of the most recent change point, windowed posterior)``."""
        return map_change_point(self.state, self.hp.delta)

    def change_posterior(self):
        return posterior_change_point(self.state)
