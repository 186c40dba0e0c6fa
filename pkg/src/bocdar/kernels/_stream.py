"""Whole-stream compiled loops used for scaling measurements.

They run exactly the per-step work of the engines (segment scores, table
recursion, MAP run length and anomaly probability) without returning to the
interpreter between steps, so timings reflect the recursion rather than call
overhead.  Results are checked against the engines in the test-suite.
"""

import numpy as np
from numba import njit

from ._numba import (
    NEG_INF,
    _logaddexp,
    _lse_slice,
    ar_tables,
    bocd_tables,
    intercept_window,
    wa_columns,
)


@njit(cache=True)
def _window_prob(a_mass, tot_mass, lo, hi):
    num = _lse_slice(a_mass, lo, hi)
    if num == NEG_INF:
        return 0.0
    return np.exp(num - _lse_slice(tot_mass, lo, hi))


@njit(cache=True)
def ar_stream(y, a0, b0, k0, dt, u_a, u_c, lp):
    T = y.shape[0]
    r_star = np.zeros(T, dtype=np.int64)
    prob = np.full(T, np.nan)
    empty = np.zeros(0)
    s1, s2, lm = intercept_window(empty, empty, y[0], 0, a0, b0, k0)
    ha = np.full(1, NEG_INF)
    hc = lm.copy()
    for t in range(2, T + 1):
        n = min(t - 1, u_c)
        s1, s2, lm_new = intercept_window(s1, s2, y[t - 1], n, a0, b0, k0)
        lpred = lm_new.copy()
        for r in range(1, n + 1):
            lpred[r] -= lm[r - 1]
        ha, hc = ar_tables(ha, hc, lpred, t, n, dt, lp)
        lm = lm_new
        mass = np.empty(n + 1)
        best = 0
        for r in range(n + 1):
            mass[r] = _logaddexp(ha[r], hc[r])
            if mass[r] > mass[best]:
                best = r
        r_star[t - 1] = best
        if best <= min(n, u_a):
            prob[t - 1] = _window_prob(ha, mass, max(0, best - dt), best + 1)
    return r_star, prob


@njit(cache=True)
def bocd_stream(y, a0, b0, k0, dt, u_a, u_c, lp):
    T = y.shape[0]
    r_star = np.zeros(T, dtype=np.int64)
    prob = np.full(T, np.nan)
    empty = np.zeros(0)
    s1, s2, lm = intercept_window(empty, empty, y[0], 0, a0, b0, k0)
    wa = np.full((1, 1), NEG_INF)
    wc = lm.copy()
    q_hist = np.full((dt + 1, u_c + 1), NEG_INF)
    q_hist[0, 0] = lm[0]
    for t in range(2, T + 1):
        n = min(t - 1, u_c)
        s1, s2, lm_new = intercept_window(s1, s2, y[t - 1], n, a0, b0, k0)
        lpred = lm_new.copy()
        for r in range(1, n + 1):
            lpred[r] -= lm[r - 1]
        wa, wc, q = bocd_tables(wa, wc, q_hist, lpred, lm, t, n, dt, lp)
        lm = lm_new
        for k in range(dt, 0, -1):
            q_hist[k, :] = q_hist[k - 1, :]
        q_hist[0, :] = NEG_INF
        q_hist[0, : n + 1] = q
        cols = wa_columns(wa)
        mass = np.empty(n + 1)
        best = 0
        for r in range(n + 1):
            mass[r] = _logaddexp(cols[r], wc[r])
            if mass[r] > mass[best]:
                best = r
        r_star[t - 1] = best
        if best <= min(n, u_a):
            prob[t - 1] = _window_prob(cols, mass, max(0, best - dt), best + 1)
    return r_star, prob
