import numpy as np
import pytest

from bocdar import _backend
from bocdar.engine_ar import BocdArEngine
from bocdar.engine_bocd import BocdEngine
from bocdar.evalkit import stream_run
from bocdar.kernels import get_kernels

from conftest import assert_log_close, run_engine, wide_hp

numba_only = pytest.mark.skipif(not _backend.HAVE_NUMBA, reason="numba not installed")


def _series(rng, T=150):
    y = rng.normal(2.0, 0.5, T)
    y[40:] += 3.0
    y[80:83] -= 4.0
    return y


@numba_only
@pytest.mark.parametrize("cls,kw", [(BocdEngine, {}), (BocdArEngine, {"joint": True})])
def test_backends_agree_with_binding_windows(rng, cls, kw):
    hp = wide_hp(u_a=10, u_c=30, delta_t=3)
    y = _series(rng)
    a = run_engine(cls, y, hp, "numpy", **kw).state
    b = run_engine(cls, y, hp, "numba", **kw).state
    names = ("log_wa", "log_wc", "log_qc") if cls is BocdEngine else ("log_ha", "log_hc", "log_ga")
    for name in names:
        assert_log_close(getattr(a, name), getattr(b, name), 1e-10)


@numba_only
@pytest.mark.parametrize("engine,cls", [("bocd", BocdEngine), ("bocd-ar", BocdArEngine)])
def test_stream_loop_matches_engine(rng, engine, cls):
    hp = wide_hp(u_a=12, u_c=40, delta_t=4)
    y = _series(rng, 120)
    r_stream, p_stream = stream_run(engine, y, hp)
    eng = cls(hp, backend="numba")
    for t, v in enumerate(y):
        eng.step(v)
        r = eng.most_recent_change()
        assert r == r_stream[t]
        p = eng.anomaly_probability(r) if t > 0 else None
        if p is None:
            assert np.isnan(p_stream[t])
        else:
            assert p == pytest.approx(p_stream[t], abs=1e-10)


def test_intercept_window_backends_agree(rng):
    if not _backend.HAVE_NUMBA:
        pytest.skip("numba not installed")
    kn, kb = get_kernels("numpy"), get_kernels("numba")
    s = [(np.zeros(0), np.zeros(0))] * 2
    for t, y in enumerate(rng.normal(size=50)):
        n = min(t, 20)
        out = [k.intercept_window(*s[i], y, n, 0.5, 0.125, 0.01) for i, k in enumerate((kn, kb))]
        np.testing.assert_allclose(out[0][2], out[1][2], atol=1e-12)
        s = [o[:2] for o in out]


def test_env_flag_selects_backend(monkeypatch):
    monkeypatch.setenv("BOCDAR_BACKEND", "numpy")
    assert _backend.default_backend_name() == "numpy"
    monkeypatch.setenv("BOCDAR_BACKEND", "")
    monkeypatch.setenv("BOCDAR_DISABLE_NUMBA", "1")
    assert _backend.default_backend_name() == "numpy"
    monkeypatch.setenv("BOCDAR_BACKEND", "fortran")
    with pytest.raises(ValueError):
        _backend.default_backend_name()


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        get_kernels("cuda")
