import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bocdar import obsmodel
from bocdar.errors import ConfigError, DimensionError
from bocdar.kernels import get_kernels
from bocdar.obsmodel import (
    REGRESSION,
    ObsModelConfig,
    log_marginal,
    log_predictive,
    merge,
    push,
    stats_from,
)

from conftest import BACKENDS
from oracles import mvt_log_marginal, quadrature_log_marginal


def test_quadrature_oracle_50_segments():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        cfg = ObsModelConfig(
            sigma0_sq=float(rng.uniform(0.1, 2.0)),
            v0=float(rng.uniform(1.0, 4.0)),
            k0=float(rng.uniform(0.01, 1.0)),
        )
        n = int(rng.integers(1, 6))
        y = rng.normal(rng.uniform(-3, 3), rng.uniform(0.2, 2.0), n)
        got = log_marginal(stats_from(y, None, cfg), cfg)
        worst = max(worst, abs(got - quadrature_log_marginal(y, cfg)))
    assert worst < 1e-6


def test_intercept_matches_multivariate_t(rng):
    cfg = ObsModelConfig()
    for n in (1, 2, 7, 20):
        y = rng.normal(4.0, 0.5, n)
        assert log_marginal(stats_from(y, None, cfg), cfg) == pytest.approx(
            mvt_log_marginal(y, None, cfg), abs=1e-9
        )


@pytest.mark.parametrize("dim", [1, 3])
def test_regression_matches_multivariate_t(rng, dim):
    cfg = ObsModelConfig(variant=REGRESSION, feature_dim=dim, k0=0.3, v0=2.0)
    for n in (1, 4, 15):
        X = rng.normal(size=(n, dim))
        y = X @ rng.normal(size=dim) + rng.normal(0, 0.3, n)
        got = log_marginal(stats_from(y, X, cfg), cfg)
        assert got == pytest.approx(mvt_log_marginal(y, X, cfg), abs=1e-8)


@pytest.mark.parametrize("variant", ["intercept", "regression"])
def test_telescoping_identity(rng, variant):
    cfg = ObsModelConfig() if variant == "intercept" else ObsModelConfig(
        variant=REGRESSION, feature_dim=2)
    for n in (1, 2, 10, 50):
        y = rng.normal(2.0, 1.0, n)
        X = None if variant == "intercept" else rng.normal(size=(n, 2))
        s = obsmodel.empty_stats(cfg)
        total = 0.0
        for i in range(n):
            x = None if X is None else X[i]
            total += log_predictive(s, y[i], x, cfg)
            s = push(s, y[i], x)
        assert total == pytest.approx(log_marginal(stats_from(y, X, cfg), cfg), abs=1e-10)


def test_empty_segment_has_zero_log_marginal():
    cfg = ObsModelConfig()
    assert log_marginal(obsmodel.empty_stats(cfg), cfg) == 0.0


def test_merge_is_concatenation(rng):
    cfg = ObsModelConfig()
    a, b = rng.normal(size=4), rng.normal(size=6)
    m = merge(stats_from(a, None, cfg), stats_from(b, None, cfg))
    assert log_marginal(m, cfg) == pytest.approx(
        log_marginal(stats_from(np.r_[a, b], None, cfg), cfg), abs=1e-12)


def test_dimension_errors():
    cfg = ObsModelConfig(variant=REGRESSION, feature_dim=2)
    with pytest.raises(DimensionError):
        push(obsmodel.empty_stats(cfg), 1.0, [1.0])
    with pytest.raises(DimensionError):
        merge(obsmodel.empty_stats(cfg), obsmodel.empty_stats(ObsModelConfig()))


@pytest.mark.parametrize("kw", [
    dict(variant="poisson"), dict(sigma0_sq=0.0), dict(v0=-1.0), dict(k0=np.inf),
    dict(feature_dim=2), dict(variant=REGRESSION, feature_dim=0),
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        ObsModelConfig(**kw)


def test_config_round_trip():
    cfg = ObsModelConfig(variant=REGRESSION, feature_dim=3, k0=0.5)
    assert ObsModelConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("name", BACKENDS)
@pytest.mark.parametrize("variant", ["intercept", "regression"])
def test_cache_matches_direct_segments(rng, name, variant):
    cfg = ObsModelConfig() if variant == "intercept" else ObsModelConfig(
        variant=REGRESSION, feature_dim=1)
    k = get_kernels(name)
    T, cap = 30, 12
    y = rng.normal(size=T)
    X = None if variant == "intercept" else rng.normal(size=(T, 1))
    xi = (lambda i: None) if X is None else (lambda i: X[i])
    cache = obsmodel.cache_init(y[0], xi(0), cfg, k)
    for t in range(2, T + 1):
        n = min(t - 1, cap)
        cache = obsmodel.cache_step(cache, y[t - 1], xi(t - 1), n, cfg, k)
        for r in range(n + 1):
            seg = slice(t - 1 - r, t)
            direct = log_marginal(stats_from(y[seg], None if X is None else X[seg], cfg), cfg)
            assert cache.log_marg[r] == pytest.approx(direct, abs=1e-9)
        assert cache.log_pred[0] == pytest.approx(cache.log_marg[0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=30),
       st.floats(0.01, 5.0), st.floats(0.5, 5.0), st.floats(0.001, 2.0))
def test_predictives_finite_and_telescope(values, s0, v0, k0):
    cfg = ObsModelConfig(sigma0_sq=s0, v0=v0, k0=k0)
    s = obsmodel.empty_stats(cfg)
    total = 0.0
    for y in values:
        lp = log_predictive(s, y, None, cfg)
        assert np.isfinite(lp)
        total += lp
        s = push(s, y)
    assert total == pytest.approx(log_marginal(s, cfg), abs=1e-8, rel=1e-10)
