import itertools

import numpy as np
import pytest
from scipy.special import logsumexp

from bocdar.obsmodel import ObsModelConfig, log_marginal, stats_from
from bocdar.oracle import (
    MAX_LEN,
    PathLaw,
    enumerate_histories,
    enumerate_joint,
    history_prior,
    most_recent_change_point,
)
from bocdar.simgen import sample_changes


@pytest.mark.parametrize("p0,q0,dt", [(0.1, 0.2, 4), (0.3, 0.7, 1), (0.05, 0.5, 3)])
def test_prior_normalises(p0, q0, dt):
    law = PathLaw("bocd", p0, q0, dt)
    for T in range(1, 10):
        total = logsumexp([history_prior((1,) + tail, law)[0]
                           for tail in itertools.product((0, 1), repeat=T - 1)])
        assert total == pytest.approx(0.0, abs=1e-12)


def test_prior_matches_sampler_frequencies():
    law = PathLaw("bocd", 0.3, 0.6, 2)
    T, n = 6, 40000
    rng = np.random.default_rng(0)
    counts = {}
    for _ in range(n):
        c, a = sample_changes(law.p0, law.q0, law.delta_t, T, rng)
        key = tuple(int(v) for v in c)
        counts[key] = counts.get(key, 0) + 1
    for key, k in counts.items():
        p = np.exp(history_prior(key, law)[0])
        assert abs(k / n - p) < 5 * np.sqrt(p * (1 - p) / n) + 1e-3


def test_sampler_anomaly_flags_follow_law():
    law = PathLaw("bocd", 0.2, 0.5, 3)
    rng = np.random.default_rng(1)
    for _ in range(200):
        c, a = sample_changes(law.p0, law.q0, law.delta_t, 12, rng)
        _, changes = history_prior(tuple(int(v) for v in c), law)
        flags = [int(f) for t, f in changes[1:]]
        assert flags == [int(a[t - 1]) for t, _ in changes[1:]]


def test_evidence_matches_iid_change_recursion_when_rates_equal(rng):
    # with q0 == p0 the change indicators are iid, so the evidence is the
    # plain product-partition sum computed by a forward recursion
    cfg = ObsModelConfig()
    h = 0.25
    law = PathLaw("bocd", h, h, 3)
    y = rng.normal(0, 1, 7)
    T = len(y)
    seg = lambda i, j: log_marginal(stats_from(y[i:j], None, cfg), cfg)  # noqa: E731
    # fwd[j]: log mass of y[:j] with a segment ending at j
    fwd = np.full(T + 1, -np.inf)
    fwd[0] = 0.0
    for j in range(1, T + 1):
        terms = []
        for i in range(j):
            lp = 0.0 if i == 0 else np.log(h)
            terms.append(fwd[i] + lp + seg(i, j) + (j - i - 1) * np.log1p(-h))
        fwd[j] = logsumexp(terms)
    res = enumerate_joint(y, law, cfg)
    assert res.log_evidence == pytest.approx(fwd[T], abs=1e-10)


def test_tables_sum_to_evidence(rng):
    y = rng.normal(size=8)
    for variant in ("bocd", "bocd-ar"):
        res = enumerate_joint(y, PathLaw(variant, 0.2, 0.3, 2))
        assert res.log_evidence_tables == pytest.approx(res.log_evidence, abs=1e-10)
        ar_total = np.logaddexp(logsumexp(res.log_ha), logsumexp(res.log_hc))
        assert ar_total == pytest.approx(res.log_evidence, abs=1e-10)
        assert logsumexp(res.log_ga) == pytest.approx(logsumexp(res.log_ha), abs=1e-10)
        assert res.run_length_posterior().sum() == pytest.approx(1.0, abs=1e-12)
        assert res.change_point_posterior().sum() == pytest.approx(1.0, abs=1e-12)


def test_joint_conditional_not_above_marginal(rng):
    y = rng.normal(size=9)
    res = enumerate_joint(y, PathLaw("bocd-ar", 0.2, 0.4, 3))
    for r in range(9):
        assert res.joint_anomaly_conditional(r) <= res.anomaly_conditional(r) + 1e-12


def test_most_recent_change_point_skips_anomaly():
    # change point at 3, anomaly 6..7 ending with the change at 8
    assert most_recent_change_point(((1, False), (3, False), (6, False), (8, True))) == 3
    assert most_recent_change_point(((1, False), (3, False), (6, False))) == 6
    assert most_recent_change_point(((1, False),)) == 1


def test_length_limits():
    with pytest.raises(ValueError):
        enumerate_histories(np.zeros(MAX_LEN + 1), PathLaw())
    with pytest.raises(ValueError):
        enumerate_histories(np.zeros(0), PathLaw())
    with pytest.raises(ValueError):
        PathLaw("other")
