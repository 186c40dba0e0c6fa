"""Loop kernels compiled with numba.

Signatures and semantics match the numpy kernels exactly; the numpy module is
the reference these are tested against.
"""

import math

import numpy as np
from numba import njit

NEG_INF = -np.inf
LOG_2PI = math.log(2.0 * math.pi)


@njit(cache=True)
def _lse_slice(a, lo, hi):
    m = NEG_INF
    for i in range(lo, hi):
        if a[i] > m:
            m = a[i]
    if m == NEG_INF:
        return NEG_INF
    s = 0.0
    for i in range(lo, hi):
        s += math.exp(a[i] - m)
    return m + math.log(s)


@njit(cache=True)
def _logaddexp(x, y):
    if x == NEG_INF:
        return y
    if y == NEG_INF:
        return x
    if x > y:
        return x + math.log1p(math.exp(y - x))
    return y + math.log1p(math.exp(x - y))


@njit(cache=True)
def intercept_window(s1_prev, s2_prev, y, n, a0, b0, k0):
    s1 = np.empty(n + 1)
    s2 = np.empty(n + 1)
    log_marg = np.empty(n + 1)
    const = 0.5 * math.log(k0) + a0 * math.log(b0) - math.lgamma(a0)
    for r in range(n + 1):
        if r == 0:
            s1[r] = y
            s2[r] = y * y
        else:
            s1[r] = s1_prev[r - 1] + y
            s2[r] = s2_prev[r - 1] + y * y
        cnt = r + 1.0
        kn = k0 + cnt
        an = a0 + 0.5 * cnt
        bn = b0 + 0.5 * (s2[r] - s1[r] * s1[r] / kn)
        log_marg[r] = (
            -0.5 * cnt * LOG_2PI
            - 0.5 * math.log(kn)
            - an * math.log(bn)
            + math.lgamma(an)
            + const
        )
    return s1, s2, log_marg


@njit(cache=True)
def bocd_tables(wa_prev, wc_prev, q_hist, log_pred, log_marg_prev, t, n, dt, lp):
    lp0 = lp[0]
    l1mp0 = lp[1]
    lq0 = lp[2]
    l1mq0 = lp[3]
    n_prev = wc_prev.shape[0] - 1
    m = min(n, n_prev + 1)

    wa = np.full((n + 1, n + 1), NEG_INF)
    for d in range(1, m + 1):
        for r in range(1, m + 1):
            v = wa_prev[d - 1, r - 1]
            if v != NEG_INF:
                wa[d, r] = v + log_pred[r] + l1mp0

    base = log_pred[0] + lp0 + lq0
    tmp = np.empty(dt)
    for d in range(n + 1):
        if d == t - 1:
            r_cap = d - 1
        else:
            r_cap = d - dt - 1
        a_cap = min(dt - 1, r_cap - 1)
        k = 0
        for rp in range(min(a_cap, n_prev) + 1):
            if d - 2 - rp < 0:
                break
            tmp[k] = q_hist[rp + 1, d - 2 - rp] + log_marg_prev[rp] + rp * l1mq0
            k += 1
        if k > 0:
            wa[d, 0] = _lse_slice(tmp, 0, k) + base

    wc = np.full(n + 1, NEG_INF)
    for d in range(1, m + 1):
        if d > dt or d == t - 1:
            fac = l1mp0
        else:
            fac = l1mq0
        wc[d] = wc_prev[d - 1] + log_pred[d] + fac
    if t >= dt + 3:
        src = _lse_slice(q_hist[0], dt, n_prev + 1)
    else:
        src = q_hist[0, t - 2]
    wc[0] = src + log_pred[0] + lp0

    q = np.empty(n + 1)
    for d in range(n + 1):
        q[d] = _logaddexp(_lse_slice(wa[d], 0, n + 1), wc[d])
    return wa, wc, q


@njit(cache=True)
def wa_columns(wa):
    n1 = wa.shape[0]
    out = np.empty(n1)
    col = np.empty(n1)
    for r in range(n1):
        for d in range(n1):
            col[d] = wa[d, r]
        out[r] = _lse_slice(col, 0, n1)
    return out


@njit(cache=True)
def ar_tables(ha_prev, hc_prev, log_pred, t, n, dt, lp):
    lp0 = lp[0]
    l1mp0 = lp[1]
    lq0 = lp[2]
    l1mq0 = lp[3]
    n_prev = hc_prev.shape[0] - 1
    m = min(n, n_prev + 1)
    ha = np.full(n + 1, NEG_INF)
    hc = np.full(n + 1, NEG_INF)
    for r in range(1, m + 1):
        ha[r] = ha_prev[r - 1] + log_pred[r] + l1mp0
        if r > dt or r == t - 1:
            fac = l1mp0
        else:
            fac = l1mq0
        hc[r] = hc_prev[r - 1] + log_pred[r] + fac
    a_cap = min(dt - 1, t - 3)
    if a_cap >= 0:
        ha[0] = _lse_slice(hc_prev, 0, a_cap + 1) + log_pred[0] + lq0
    if t >= dt + 3:
        src = _lse_slice(hc_prev, dt, n_prev + 1)
    else:
        src = hc_prev[t - 2]
    hc[0] = _logaddexp(src, _lse_slice(ha_prev, 0, n_prev + 1)) + log_pred[0] + lp0
    return ha, hc


@njit(cache=True)
def g_table(g_prev, hc_prev, log_pred, t, n_a, dt, lp):
    l1mp0 = lp[1]
    lq0 = lp[2]
    g = np.full((n_a + 1, dt), NEG_INF)
    a_cap = min(dt - 1, t - 3)
    for rp in range(a_cap + 1):
        g[0, rp] = hc_prev[rp] + log_pred[0] + lq0
    ma = min(n_a, g_prev.shape[0])
    for r in range(1, ma + 1):
        inc = log_pred[r] + l1mp0
        for rp in range(dt):
            v = g_prev[r - 1, rp]
            if v != NEG_INF:
                g[r, rp] = v + inc
    return g


@njit(cache=True)
def bocpd_tables(rl_prev, log_pred, n, log_h, log_1mh):
    n_prev = rl_prev.shape[0] - 1
    m = min(n, n_prev + 1)
    rl = np.full(n + 1, NEG_INF)
    for r in range(1, m + 1):
        rl[r] = rl_prev[r - 1] + log_pred[r] + log_1mh
    rl[0] = _lse_slice(rl_prev, 0, n_prev + 1) + log_pred[0] + log_h
    return rl
