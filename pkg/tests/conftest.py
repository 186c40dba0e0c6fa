import numpy as np
import pytest

from bocdar._backend import HAVE_NUMBA
from bocdar.params import Hyperparams

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def wide_hp(**kw):
    """Hyperparameters whose windows never bind on short series."""
    base = dict(u_a=40, u_c=80)
    base.update(kw)
    return Hyperparams(**base)


def assert_log_close(a, b, atol):
    """Compare log-domain arrays, requiring -inf in exactly the same cells."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    assert a.shape == b.shape, (a.shape, b.shape)
    fa, fb = np.isfinite(a), np.isfinite(b)
    assert np.array_equal(fa, fb), f"-inf pattern differs:\n{a}\n{b}"
    if fa.any():
        err = np.max(np.abs(a[fa] - b[fb]))
        assert err <= atol, f"max abs error {err:.3g} > {atol}"


def run_engine(engine_cls, y, hp, backend=None, **kw):
    eng = engine_cls(hp, None, backend, **kw)
    for v in y:
        eng.step(float(v))
    return eng


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
