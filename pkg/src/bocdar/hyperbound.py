"""Guidance for choosing ``q0`` and ``lambda_a``.

When a change point has just occurred, the prior probability that the most
recent change will be read as an anomaly end grows with ``q0``.  Keeping that
probability below the anomaly threshold ``lambda_a`` avoids a stream of
spurious anomaly alarms.  ``spurious_alarm_rate`` evaluates it in closed form;
it increases monotonically in ``q0``, so the largest acceptable ``q0`` is
found by bisection.
"""

import warnings

import numpy as np
from scipy.special import expit, logit


def _check(p0, q0, delta_t):
    if not (0.0 < p0 < 1.0 and 0.0 < q0 < 1.0):
        raise ValueError("p0 and q0 must lie strictly between 0 and 1")
    if int(delta_t) != delta_t or delta_t < 1:
        raise ValueError("delta_t must be a positive integer")


def spurious_alarm_log_odds(p0, q0, delta_t):
    """Log odds of :func:`spurious_alarm_rate`; stays strictly monotone where the rate saturates."""
    _check(p0, q0, delta_t)
    i = np.arange(delta_t)
    # sum_i (1-q0)^i (1-p0)^(dt-1-i), in logs to stay stable for long horizons
    log_terms = i * np.log1p(-q0) + (delta_t - 1 - i) * np.log1p(-p0)
    m = log_terms.max()
    log_s = m + np.log(np.exp(log_terms - m).sum())
    # the common factor p0 cancels
    return float(np.log(q0) + log_s - delta_t * np.log1p(-q0))


def spurious_alarm_rate(p0, q0, delta_t):
    """Prior probability that a change followed by ``delta_t`` quiet steps looks like an anomaly."""
    return float(expit(spurious_alarm_log_odds(p0, q0, delta_t)))


def q0_upper_bound(p0, delta_t, lambda_a, tol=1e-10, max_iter=200):
    """Largest ``q0`` whose spurious-alarm rate does not exceed ``lambda_a``."""
    if not 0.0 < lambda_a < 1.0:
        raise ValueError("lambda_a must lie strictly between 0 and 1")
    target = logit(lambda_a)
    lo, hi = 0.0, 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if spurious_alarm_log_odds(p0, mid, delta_t) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def lambda_a_lower_bound(p0, q0, delta_t):
    """Smallest ``lambda_a`` compatible with ``q0``; any larger threshold is safe."""
    return spurious_alarm_rate(p0, q0, delta_t)


def check_hyperparams(hp, warn=True):
    """Return ``(ok, bound)``; optionally warn when ``q0`` exceeds the bound."""
    bound = q0_upper_bound(hp.p0, hp.delta_t, hp.lambda_a)
    ok = hp.q0 <= bound
    if warn and not ok:
        warnings.warn(
            f"q0={hp.q0} exceeds the upper bound {bound:.4g} for p0={hp.p0}, "
            f"delta_t={hp.delta_t}, lambda_a={hp.lambda_a}; expect frequent spurious anomalies",
            stacklevel=2,
        )
    return ok, bound
