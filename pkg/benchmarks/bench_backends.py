"""Per-step time of the numba and numpy backends across search-range sizes.

    python3 benchmarks/bench_backends.py [--sizes 50 100 200 400] [--steps 300]

Each engine is stepped through a noisy stationary stream once its change-point
range is full; the median wall time of ``engine.step`` is reported, so the
figures include the Python driver cost that both backends share.
"""

import argparse
import json
import time

import numpy as np

from bocdar._backend import HAVE_NUMBA
from bocdar.engine_ar import BocdArEngine
from bocdar.engine_bocd import BocdEngine
from bocdar.params import Hyperparams

ENGINES = {"bocd": BocdEngine, "bocd-ar": BocdArEngine}


def step_time(cls, backend, u_c, n_steps, seed=0):
    hp = Hyperparams(u_c=u_c, u_a=min(27, u_c - 1))
    y = np.random.default_rng(seed).normal(4.0, 0.5, u_c + 1 + n_steps)
    eng = cls(hp, backend=backend)
    for v in y[: u_c + 1]:
        eng.step(v)
    ts = []
    for v in y[u_c + 1 :]:
        t0 = time.perf_counter()
        eng.step(v)
        ts.append(time.perf_counter() - t0)
    return float(np.median(ts))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--json", help="write results here as well")
    args = p.parse_args(argv)
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if HAVE_NUMBA:  # compile outside the timed region
        for cls in ENGINES.values():
            step_time(cls, "numba", 10, 5)
    rows = []
    print(f"{'engine':<9}{'u_c':>6}" + "".join(f"{b + ' us':>14}" for b in backends) + f"{'speedup':>10}")
    for name, cls in ENGINES.items():
        for u in args.sizes:
            t = {b: step_time(cls, b, u, args.steps) for b in backends}
            speed = t["numpy"] / t["numba"] if "numba" in t else float("nan")
            rows.append({"engine": name, "u_c": u, **{f"{b}_s": v for b, v in t.items()}})
            print(f"{name:<9}{u:>6}" + "".join(f"{1e6 * t[b]:>14.1f}" for b in backends)
                  + f"{speed:>10.2f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
