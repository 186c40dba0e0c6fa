import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bocdar.engine_bocd import (
    BocdEngine,
    anomaly_endpoints_sequential,
    posterior_change_point,
    posterior_run_length,
)
from bocdar.errors import HistoryMissError
from bocdar.oracle import PathLaw, enumerate_joint

from conftest import assert_log_close, run_engine, wide_hp


@pytest.mark.parametrize("p0,q0,dt", [(0.05, 0.1, 1), (0.2, 0.3, 2), (0.1, 0.2, 4)])
def test_tables_match_oracle(backend, p0, q0, dt):
    rng = np.random.default_rng(7)
    hp = wide_hp(p0=p0, q0=q0, delta_t=dt)
    for T in range(1, 9):
        for _ in range(3):
            y = rng.normal(0, 1, T) + np.r_[np.zeros(T // 2), 3 * np.ones(T - T // 2)]
            st_ = run_engine(BocdEngine, y, hp, backend).state
            ref = enumerate_joint(y, PathLaw.from_hp(hp, "bocd"))
            assert_log_close(st_.log_wa, ref.log_wa, 1e-9)
            assert_log_close(st_.log_wc, ref.log_wc, 1e-9)
            assert_log_close(st_.log_qc, ref.log_qc, 1e-9)


def test_posteriors_match_oracle(backend, rng):
    hp = wide_hp(p0=0.2, q0=0.4, delta_t=2)
    y = np.r_[rng.normal(0, 0.3, 4), 5.0, 5.2, rng.normal(0, 0.3, 2)]
    eng = run_engine(BocdEngine, y, hp, backend)
    ref = enumerate_joint(y, PathLaw.from_hp(hp, "bocd"))
    post, r_star = eng.run_length_posterior()
    np.testing.assert_allclose(post, ref.run_length_posterior(), atol=1e-10)
    np.testing.assert_allclose(posterior_change_point(eng.state),
                               ref.change_point_posterior(), atol=1e-10)
    for r in range(len(y)):
        got = eng.anomaly_probability(r)
        if got is not None:
            assert got == pytest.approx(ref.anomaly_conditional(r), abs=1e-10)


def test_endpoints_on_obvious_anomaly(backend, rng):
    hp = wide_hp(p0=0.05, q0=0.3, delta_t=4)
    y = np.r_[rng.normal(0, 0.2, 30), 6 + rng.normal(0, 0.2, 3), rng.normal(0, 0.2, 3)]
    eng = run_engine(BocdEngine, y, hp, backend)
    r_star = eng.most_recent_change()
    assert r_star == 2
    assert eng.anomaly_probability(r_star) > 0.5
    r1, r2 = eng.anomaly_endpoints(r_star)
    # the anomaly ends r1 + 1 steps back and lasts r2 + 1 points
    assert (r1, r2) == (2, 2)


def test_endpoint_history_miss():
    hp = wide_hp(u_a=5, u_c=10, delta_t=2)
    eng = run_engine(BocdEngine, np.zeros(30), hp)
    st_ = eng.state
    with pytest.raises(HistoryMissError):
        anomaly_endpoints_sequential(st_.__class__(**{**st_.__dict__, "wc_hist": st_.wc_hist[:1]}),
                                     3, 2)


def test_windows_cap_table_sizes(backend, rng):
    hp = wide_hp(u_a=8, u_c=15, delta_t=3)
    eng = run_engine(BocdEngine, rng.normal(size=60), hp, backend)
    assert eng.state.n_c == 15
    assert eng.state.log_wc.shape == (16,)
    assert eng.state.n_a <= 8


def test_truncation_keeps_posterior_close(rng):
    y = np.r_[rng.normal(0, 0.5, 60), rng.normal(3, 0.5, 40)]
    full = run_engine(BocdEngine, y, wide_hp(u_a=27, u_c=299))
    trunc = run_engine(BocdEngine, y, wide_hp(u_a=27, u_c=299, trunc_mass=1e-8))
    assert trunc.state.n_c <= full.state.n_c
    p_full, r_full = full.run_length_posterior()
    p_tr, r_tr = trunc.run_length_posterior()
    assert r_full == r_tr
    m = len(p_tr)
    assert np.abs(p_full[:m] - p_tr).max() < 1e-6


def test_snapshot_restore_is_exact(rng):
    y = rng.normal(size=40)
    eng = run_engine(BocdEngine, y[:20], wide_hp())
    snap = eng.snapshot()
    for v in y[20:]:
        eng.step(v)
    a = eng.state.log_qc.copy()
    eng.restore(snap)
    for v in y[20:]:
        eng.step(v)
    np.testing.assert_array_equal(eng.state.log_qc, a)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=1, max_size=40),
       st.floats(0.01, 0.5), st.floats(0.01, 0.9), st.integers(1, 5))
def test_posteriors_normalised(values, p0, q0, dt):
    hp = wide_hp(p0=p0, q0=q0, delta_t=dt, u_a=dt + 5, u_c=dt + 15)
    eng = BocdEngine(hp)
    for v in values:
        eng.step(v)
        post, _ = posterior_run_length(eng.state)
        assert post.sum() == pytest.approx(1.0, abs=1e-10)
        assert posterior_change_point(eng.state).sum() == pytest.approx(1.0, abs=1e-10)
        assert np.all(np.isfinite(eng.state.log_qc) | (eng.state.log_qc == -np.inf))
