"""Pure-numpy kernels.

Every function returns fresh arrays and never writes into its inputs, so
engine states can be shared by reference between checkpoints.

``lp`` is always the vector ``[log p0, log(1-p0), log q0, log(1-q0)]``.
"""

import numpy as np
from scipy.special import gammaln

from ..logmath import NEG_INF, lse

LOG_2PI = float(np.log(2.0 * np.pi))


def intercept_window(s1_prev, s2_prev, y, n, a0, b0, k0):
    """Advance per-start sums by one observation and score every segment.

    Row ``r`` of the outputs describes the segment that started ``r`` steps
    ago and ends at the new observation.
    """
    s1 = np.empty(n + 1)
    s2 = np.empty(n + 1)
    s1[0] = y
    s2[0] = y * y
    s1[1:] = s1_prev[:n] + y
    s2[1:] = s2_prev[:n] + y * y
    cnt = np.arange(1.0, n + 2.0)
    kn = k0 + cnt
    an = a0 + 0.5 * cnt
    bn = b0 + 0.5 * (s2 - s1 * s1 / kn)
    log_marg = (
        -0.5 * cnt * LOG_2PI
        + 0.5 * (np.log(k0) - np.log(kn))
        + a0 * np.log(b0)
        - an * np.log(bn)
        + gammaln(an)
        - gammaln(a0)
    )
    return s1, s2, log_marg


def bocd_tables(wa_prev, wc_prev, q_hist, log_pred, log_marg_prev, t, n, dt, lp):
    lp0, l1mp0, lq0, l1mq0 = lp
    n_prev = wc_prev.shape[0] - 1
    m = min(n, n_prev + 1)
    d = np.arange(n + 1)
    r_cap = np.where(d == t - 1, d - 1, d - dt - 1)

    wa = np.full((n + 1, n + 1), NEG_INF)
    if m > 0:
        wa[1 : m + 1, 1 : m + 1] = wa_prev[:m, :m] + (log_pred[1 : m + 1] + l1mp0)

    a_cap = np.minimum(dt - 1, r_cap - 1)
    births = np.full((dt, n + 1), NEG_INF)
    for rp in range(min(dt, n_prev + 1)):
        ok = (a_cap >= rp) & (d - 2 - rp >= 0)
        if not ok.any():
            continue
        births[rp, ok] = (
            q_hist[rp + 1, d[ok] - 2 - rp] + log_marg_prev[rp] + rp * l1mq0
        )
    wa[:, 0] = lse(births, axis=0) + (log_pred[0] + lp0 + lq0)

    wc = np.full(n + 1, NEG_INF)
    if m > 0:
        dd = d[1 : m + 1]
        fac = np.where((dd > dt) | (dd == t - 1), l1mp0, l1mq0)
        wc[1 : m + 1] = wc_prev[:m] + log_pred[1 : m + 1] + fac
    q_prev = q_hist[0]
    if t >= dt + 3:
        src = lse(q_prev[dt : n_prev + 1])
    else:
        src = q_prev[t - 2]
    wc[0] = src + log_pred[0] + lp0

    q = np.logaddexp(lse(wa, axis=1), wc)
    return wa, wc, q


def wa_columns(wa):
    """Log of the sum over d of W_a(d, r), for every r."""
    return lse(wa, axis=0)


def ar_tables(ha_prev, hc_prev, log_pred, t, n, dt, lp):
    lp0, l1mp0, lq0, l1mq0 = lp
    n_prev = hc_prev.shape[0] - 1
    m = min(n, n_prev + 1)
    ha = np.full(n + 1, NEG_INF)
    hc = np.full(n + 1, NEG_INF)
    if m > 0:
        ha[1 : m + 1] = ha_prev[:m] + log_pred[1 : m + 1] + l1mp0
        r = np.arange(1, m + 1)
        fac = np.where((r > dt) | (r == t - 1), l1mp0, l1mq0)
        hc[1 : m + 1] = hc_prev[:m] + log_pred[1 : m + 1] + fac

    a_cap = min(dt - 1, t - 3)
    if a_cap >= 0:
        ha[0] = lse(hc_prev[: a_cap + 1]) + log_pred[0] + lq0
    if t >= dt + 3:
        src = lse(hc_prev[dt:])
    else:
        src = hc_prev[t - 2]
    hc[0] = np.logaddexp(src, lse(ha_prev)) + log_pred[0] + lp0
    return ha, hc


def g_table(g_prev, hc_prev, log_pred, t, n_a, dt, lp):
    lq0 = lp[2]
    l1mp0 = lp[1]
    g = np.full((n_a + 1, dt), NEG_INF)
    a_cap = min(dt - 1, t - 3)
    if a_cap >= 0:
        g[0, : a_cap + 1] = hc_prev[: a_cap + 1] + log_pred[0] + lq0
    ma = min(n_a, g_prev.shape[0])
    if ma > 0:
        g[1 : ma + 1] = g_prev[:ma] + (log_pred[1 : ma + 1] + l1mp0)[:, None]
    return g


def bocpd_tables(rl_prev, log_pred, n, log_h, log_1mh):
    n_prev = rl_prev.shape[0] - 1
    m = min(n, n_prev + 1)
    rl = np.full(n + 1, NEG_INF)
    if m > 0:
        rl[1 : m + 1] = rl_prev[:m] + log_pred[1 : m + 1] + log_1mh
    rl[0] = lse(rl_prev) + log_pred[0] + log_h
    return rl
