import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bocdar.engine_ar import BocdArEngine, ar_anomaly_endpoints, ar_posterior_run_length
from bocdar.engine_bocd import BocdEngine
from bocdar.errors import UnsupportedOperation
from bocdar.oracle import PathLaw, enumerate_joint

from conftest import assert_log_close, run_engine, wide_hp


@pytest.mark.parametrize("p0,q0,dt", [(0.05, 0.1, 1), (0.2, 0.3, 2), (0.1, 0.2, 4)])
def test_tables_match_oracle(backend, p0, q0, dt):
    rng = np.random.default_rng(11)
    hp = wide_hp(p0=p0, q0=q0, delta_t=dt)
    for T in range(1, 9):
        for _ in range(3):
            y = rng.normal(0, 1, T)
            st_ = run_engine(BocdArEngine, y, hp, backend, joint=True).state
            ref = enumerate_joint(y, PathLaw.from_hp(hp, "bocd-ar"))
            assert_log_close(st_.log_ha, ref.log_ha, 1e-9)
            assert_log_close(st_.log_hc, ref.log_hc, 1e-9)
            assert_log_close(st_.log_ga, ref.log_ga, 1e-9)


def test_run_length_posterior_equals_bocd(backend, rng):
    # both recursions describe the same generative law
    hp = wide_hp(p0=0.1, q0=0.3, delta_t=3)
    y = np.r_[rng.normal(0, 1, 20), rng.normal(4, 1, 10)]
    a = run_engine(BocdArEngine, y, hp, backend).run_length_posterior()[0]
    b = run_engine(BocdEngine, y, hp, backend).run_length_posterior()[0]
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_anomaly_probabilities_match_oracle(backend, rng):
    hp = wide_hp(p0=0.2, q0=0.4, delta_t=3)
    y = np.r_[rng.normal(0, 0.3, 5), 4.0, 4.1, rng.normal(0, 0.3, 2)]
    eng = run_engine(BocdArEngine, y, hp, backend, joint=True)
    ref = enumerate_joint(y, PathLaw.from_hp(hp, "bocd-ar"))
    for r in range(len(y)):
        fast = eng.anomaly_probability(r)
        joint = eng.anomaly_probability_joint(r)
        if fast is None:
            continue
        assert fast == pytest.approx(ref.anomaly_conditional(r), abs=1e-10)
        assert joint == pytest.approx(ref.joint_anomaly_conditional(r), abs=1e-10)
        assert joint <= fast + 1e-12


@pytest.mark.parametrize("mode", ["sequential", "joint"])
def test_endpoints_on_obvious_anomaly(backend, rng, mode):
    hp = wide_hp(p0=0.05, q0=0.3, delta_t=4)
    y = np.r_[rng.normal(0, 0.2, 30), 6 + rng.normal(0, 0.2, 3), rng.normal(0, 0.2, 3)]
    eng = run_engine(BocdArEngine, y, hp, backend, endpoint_mode=mode)
    r_star = eng.most_recent_change()
    assert eng.anomaly_probability(r_star) > 0.5
    assert eng.anomaly_endpoints(r_star) == (2, 2)


def test_joint_needs_g_table(rng):
    eng = run_engine(BocdArEngine, rng.normal(size=10), wide_hp())
    assert eng.state.log_ga is None
    with pytest.raises(UnsupportedOperation):
        eng.anomaly_probability_joint(0)
    with pytest.raises(UnsupportedOperation):
        ar_anomaly_endpoints(eng.state, 0, 4, "joint")
    with pytest.raises(ValueError):
        BocdArEngine(wide_hp(), endpoint_mode="other")


def test_windows_cap_table_sizes(backend, rng):
    hp = wide_hp(u_a=8, u_c=15, delta_t=3)
    eng = run_engine(BocdArEngine, rng.normal(size=60), hp, backend, joint=True)
    assert eng.state.log_hc.shape == (16,)
    assert eng.state.log_ga.shape[1] == 3


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=1, max_size=40),
       st.floats(0.01, 0.5), st.floats(0.01, 0.9), st.integers(1, 5))
def test_posteriors_normalised(values, p0, q0, dt):
    hp = wide_hp(p0=p0, q0=q0, delta_t=dt, u_a=dt + 5, u_c=dt + 15)
    eng = BocdArEngine(hp, joint=True)
    for v in values:
        eng.step(v)
        post, r_star = ar_posterior_run_length(eng.state)
        assert post.sum() == pytest.approx(1.0, abs=1e-10)
        p = eng.anomaly_probability(r_star)
        if p is not None:
            assert 0.0 <= eng.anomaly_probability_joint(r_star) <= p + 1e-12 <= 1.0 + 1e-12


def test_truncation_shrinks_range_and_keeps_posterior(rng):
    y = np.r_[rng.normal(0, 0.5, 60), rng.normal(3, 0.5, 60)]
    full = run_engine(BocdArEngine, y, wide_hp(u_a=27, u_c=299))
    trunc = run_engine(BocdArEngine, y, wide_hp(u_a=27, u_c=299, trunc_mass=1e-8))
    assert trunc.state.n_c < full.state.n_c
    p_full, r_full = full.run_length_posterior()
    p_tr, r_tr = trunc.run_length_posterior()
    assert r_full == r_tr
    assert np.abs(p_full[: len(p_tr)] - p_tr).max() < 1e-6


def test_truncation_respects_minimum_length(rng):
    hp = wide_hp(u_a=10, u_c=299, delta_t=4, trunc_mass=0.5, min_range_len=25)
    eng = run_engine(BocdArEngine, rng.normal(size=80), hp)
    assert eng.state.n_c >= 24
