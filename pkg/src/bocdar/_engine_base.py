"""Plumbing shared by the two engines: caching, windows, truncation, timing."""

import time

import numpy as np

from . import obsmodel
from .errors import HistoryMissError
from .kernels import get_kernels
from .logmath import NEG_INF, lse
from .obsmodel import ObsModelConfig
from .params import Hyperparams


def hist_push(hist, vec, length):
    """Prepend ``vec`` to an immutable most-recent-first history tuple."""
    return (vec,) + hist[: length - 1]


def hist_get(hist, t, t_query):
    """Entry stored at time ``t_query`` of a history whose newest entry is time ``t``."""
    k = t - t_query
    if t_query < 1 or k < 0 or k >= len(hist):
        raise HistoryMissError(
            f"history at time {t_query} not retained (now {t}, depth {len(hist)})"
        )
    return hist[k]


def head(vec, k):
    """First ``k`` entries of ``vec`` padded with -inf."""
    out = np.full(k, NEG_INF)
    m = min(k, vec.shape[0])
    out[:m] = vec[:m]
    return out


def truncation_cutoff(log_mass, trunc_mass, floor):
    """Smallest index ``K >= floor`` whose tail beyond ``K`` has mass < ``trunc_mass``."""
    n = log_mass.shape[0] - 1
    if n <= floor:
        return n
    total = lse(log_mass)
    probs = np.exp(log_mass - total)
    tail = np.cumsum(probs[::-1])[::-1]  # tail[k] = mass of indices >= k
    ok = np.nonzero(tail < trunc_mass)[0]
    if ok.size == 0:
        return n
    return max(int(ok[0]) - 1, floor)


class EngineBase:
    kind = "base"

    def __init__(self, hp=None, obs_cfg=None, backend=None):
        self.hp = hp or Hyperparams()
        self.obs_cfg = obs_cfg or ObsModelConfig()
        self.kernels = get_kernels(backend)
        self.lp = self.hp.log_probs
        self.hist_len = self.hp.u_a + self.hp.delta_t + 2
        self.state = None
        self.cache = None
        self.timings = {"likelihoods": 0.0, "recursion": 0.0}

    @property
    def backend(self):
        return self.kernels.name

    @property
    def t(self):
        return 0 if self.state is None else self.state.t

    def step(self, y, x=None):
        t0 = time.perf_counter()
        if self.state is None:
            self.cache = obsmodel.cache_init(y, x, self.obs_cfg, self.kernels)
            t1 = time.perf_counter()
            self.state = self._init(self.cache)
        else:
            n = min(self.state.t, self.hp.u_c, self.state.n_c + 1)
            self.cache = obsmodel.cache_step(self.cache, y, x, n, self.obs_cfg, self.kernels)
            t1 = time.perf_counter()
            self.state = self._step(self.state, self.cache)
            if self.hp.trunc_mass is not None:
                self._maybe_truncate()
        t2 = time.perf_counter()
        self.timings["likelihoods"] += t1 - t0
        self.timings["recursion"] += t2 - t1
        return self.state

    def _maybe_truncate(self):
        st = self.state
        floor = max(self.hp.min_range_len - 1, st.n_a)
        k = truncation_cutoff(self._truncation_mass(st), self.hp.trunc_mass, floor)
        if k < st.n_c:
            self.state = self._truncate(st, k)
            self.cache = obsmodel.cache_truncate(self.cache, k)

    def snapshot(self):
        """Opaque value capturing the full engine state (states are immutable)."""
        return (self.state, self.cache)

    def restore(self, snap):
        self.state, self.cache = snap

    def n_ranges(self, t):
        n_c = min(t - 1, self.hp.u_c)
        return min(n_c, self.hp.u_a), n_c
