"""Command line entry point: ``bocdar detect | simulate | bench | bound | config``."""

import argparse
import csv
import json
import os
import sys
import warnings
from datetime import datetime

import numpy as np

from . import __version__
from .detector import Detector
from .errors import ConfigError
from .evalkit import format_report, run_benchmark
from .hyperbound import lambda_a_lower_bound, q0_upper_bound, spurious_alarm_rate
from .runconfig import RunConfig
from .simgen import PaperSimConfig, generate_paper_series

EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2

HP_FLAGS = {
    "p0": float, "q0": float, "delta_t": int, "u_a": int, "u_c": int,
    "lambda_a": float, "lambda_c": float, "delta": int, "confirm_lag": int,
    "trunc_mass": float,
}


class InputError(Exception):
    pass


def _warn_to_stderr(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def _build_config(args):
    base = RunConfig.load(args.config, warn=False).to_dict() if args.config else RunConfig().to_dict()
    for name in HP_FLAGS:
        val = getattr(args, name, None)
        if val is not None:
            base["hyperparams"][name] = val
    if getattr(args, "delta_t", None) is not None and "min_range_len" in base["hyperparams"]:
        base["hyperparams"]["min_range_len"] = None
    for name in ("engine", "endpoint_mode", "backend"):
        val = getattr(args, name, None)
        if val is not None:
            base["detector"][name] = val
    if getattr(args, "retain_collective", False):
        base["detector"]["retain_collective"] = True
    if getattr(args, "normalize", None):
        base["normalize"]["method"] = args.normalize
    return RunConfig.from_dict(base, warn=True)


def _add_hp_args(p):
    g = p.add_argument_group("hyperparameters (override the config file)")
    for name, typ in HP_FLAGS.items():
        flag = "--dt" if name == "delta_t" else "--" + name.replace("_", "-")
        g.add_argument(flag, dest=name, type=typ, default=None)


# ------------------------------------------------------------------ detect
def _parse_time(raw, row_idx, state):
    """Integer times pass through; ISO timestamps map to the 1-based row number."""
    raw = raw.strip()
    try:
        t = int(raw)
        kind = "int"
        key = t
    except ValueError:
        try:
            key = datetime.fromisoformat(raw)
        except ValueError:
            raise InputError(f"unparseable time {raw!r}") from None
        kind = "iso"
        t = row_idx
    if state.get("kind") not in (None, kind):
        raise InputError("mixed integer and ISO time stamps")
    prev = state.get("last")
    if prev is not None:
        try:
            bad = key <= prev
        except TypeError:
            raise InputError("time stamps with and without time zone mixed") from None
        if bad:
            raise InputError(f"time {raw!r} does not increase strictly")
    return t, kind, key


def _rows(fh):
    reader = csv.reader(fh)
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        yield lineno, row


def _looks_like_header(row):
    try:
        float(row[1])
        return False
    except (ValueError, IndexError):
        return True


def _error(lineno, msg, stream):
    stream.write(json.dumps({"schema": 1, "kind": "error", "line": lineno, "message": msg}) + "\n")
    stream.flush()


def detect(args):
    cfg = _build_config(args)
    det = Detector(cfg.hyperparams, cfg.obs_model, cfg.detector)
    dim = cfg.obs_model.feature_dim
    out = open(args.output, "w") if args.output else sys.stdout
    dump = open(args.posterior_dump, "w") if args.posterior_dump else None
    src = open(args.input, newline="") if args.input and args.input != "-" else sys.stdin
    labels = {}
    state = {}
    row_idx = 0
    try:
        for lineno, row in _rows(src):
            if row_idx == 0 and lineno == 1 and _looks_like_header(row):
                continue
            try:
                if len(row) != 2 + dim:
                    raise InputError(f"expected {2 + dim} columns, got {len(row)}")
                t, kind, key = _parse_time(row[0], row_idx + 1, state)
                try:
                    y = float(row[1])
                    x = [float(v) for v in row[2:]] if dim else None
                except ValueError:
                    raise InputError("non-numeric value or feature") from None
                if not np.isfinite(y) or (x is not None and not np.all(np.isfinite(x))):
                    raise InputError("non-finite value or feature")
            except InputError as exc:
                if args.strict:
                    print(f"error: line {lineno}: {exc}", file=sys.stderr)
                    return EXIT_INPUT
                _error(lineno, str(exc), sys.stderr)
                continue
            row_idx += 1
            state["kind"], state["last"] = kind, key
            if kind == "iso":
                labels[t] = row[0].strip()
            y, x = cfg.normalize.apply(y, x)
            events = det.process(t, y, None if x is None else np.asarray(x, dtype=float))
            ts = labels.get if kind == "iso" else None
            for ev in events:
                out.write(json.dumps(ev.to_record(ts)) + "\n")
            out.flush()
            if dump is not None:
                post, _ = det.engine.run_length_posterior()
                dump.write(json.dumps({
                    "time": t,
                    "effective_time": det.t,
                    "run_length_posterior": [round(float(v), 12) for v in post],
                }) + "\n")
                dump.flush()
    finally:
        if out is not sys.stdout:
            out.close()
        if dump is not None:
            dump.close()
        if src is not sys.stdin:
            src.close()
    return EXIT_OK


# ---------------------------------------------------------------- simulate
def simulate(args):
    series = generate_paper_series(PaperSimConfig.for_length(args.length), args.seed)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["time", "value"])
        for i, v in enumerate(series.values, start=1):
            w.writerow([i, repr(float(v))])
    finally:
        if out is not sys.stdout:
            out.close()
    truth = args.truth or (args.output + ".truth.json" if args.output else None)
    if truth:
        with open(truth, "w") as fh:
            fh.write(series.truth_json() + "\n")
    return EXIT_OK


# ------------------------------------------------------------------- bench
def bench(args):
    cfg = _build_config(args)
    engines = ["bocd-ar", "bocd", "bocpd"] if args.engine == "all" else [args.engine]
    workers = args.workers or os.cpu_count() or 1
    results = {}
    for eng in engines:
        res = run_benchmark(args.series, cfg.hyperparams, eng, cfg.obs_model, cfg.detector,
                            seed0=args.seed, workers=workers)
        print(format_report(res))
        print()
        results[eng] = res.to_dict()
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)
    return EXIT_OK


# ------------------------------------------------------------------- bound
def bound(args):
    q_max = q0_upper_bound(args.p0, args.dt, args.lambda_a)
    rec = {"p0": args.p0, "delta_t": args.dt, "lambda_a": args.lambda_a, "q0_upper_bound": q_max}
    if args.q0 is not None:
        rec["q0"] = args.q0
        rec["spurious_alarm_rate"] = spurious_alarm_rate(args.p0, args.q0, args.dt)
        rec["lambda_a_lower_bound"] = lambda_a_lower_bound(args.p0, args.q0, args.dt)
    if args.json:
        print(json.dumps(rec))
    else:
        print(f"q0 upper bound: {q_max:.10g}")
        if args.q0 is not None:
            print(f"spurious alarm rate at q0={args.q0}: {rec['spurious_alarm_rate']:.10g}")
    return EXIT_OK


# ------------------------------------------------------------------ config
def config(args):
    cfg = _build_config(args)
    print(cfg.dumps())
    return EXIT_OK


# ------------------------------------------------------------------ oracle
def oracle(args):
    from .oracle import MAX_LEN, PathLaw, enumerate_joint

    if not 1 <= args.len <= MAX_LEN:
        raise ConfigError(f"--len must lie in 1..{MAX_LEN}")
    cfg = _build_config(args)
    y = np.random.default_rng(args.seed).normal(0.0, 1.0, args.len)
    law = PathLaw.from_hp(cfg.hyperparams, args.variant)
    res = enumerate_joint(y, law, cfg.obs_model)
    np.set_printoptions(precision=6, linewidth=120)
    print(f"y = {y}")
    print(f"log evidence (histories) = {res.log_evidence:.12f}")
    print(f"log evidence (tables)    = {res.log_evidence_tables:.12f}")
    print(f"run-length posterior     = {res.run_length_posterior()}")
    print(f"change-point posterior   = {res.change_point_posterior()}")
    return EXIT_OK


# -------------------------------------------------------------------- main
def build_parser():
    p = argparse.ArgumentParser(prog="bocdar", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, metavar="{detect,simulate,bench,bound,config}")

    d = sub.add_parser("detect", help="stream a CSV through the detector")
    d.add_argument("input", nargs="?", default="-", help="CSV file (default: stdin)")
    d.add_argument("-o", "--output", help="event output file (default: stdout)")
    d.add_argument("--config", help="JSON run configuration")
    d.add_argument("--engine", choices=("bocd", "bocd-ar"))
    d.add_argument("--endpoint-mode", choices=("sequential", "joint"))
    d.add_argument("--retain-collective", action="store_true")
    d.add_argument("--backend", choices=("numba", "numpy"))
    d.add_argument("--normalize", choices=("minmax",))
    d.add_argument("--posterior-dump", help="write the run-length posterior per step here")
    d.add_argument("--strict", action="store_true", help="abort on the first malformed row")
    _add_hp_args(d)
    d.set_defaults(func=detect)

    s = sub.add_parser("simulate", help="write a synthetic benchmark series")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--length", type=int, default=1000)
    s.add_argument("-o", "--output", help="CSV path (default: stdout)")
    s.add_argument("--truth", help="ground-truth JSON path (default: <output>.truth.json)")
    s.set_defaults(func=simulate)

    b = sub.add_parser("bench", help="benchmark detectors on synthetic series")
    b.add_argument("--series", type=int, default=100)
    b.add_argument("--engine", choices=("bocd-ar", "bocd", "bocpd", "all"), default="bocd-ar")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--json", help="also write machine-readable results here")
    b.add_argument("--config", help="JSON run configuration")
    b.add_argument("--backend", choices=("numba", "numpy"))
    _add_hp_args(b)
    b.set_defaults(func=bench)

    h = sub.add_parser("bound", help="largest q0 keeping spurious anomaly alarms below lambda_a")
    h.add_argument("--p0", type=float, required=True)
    h.add_argument("--dt", type=int, required=True)
    h.add_argument("--lambda-a", dest="lambda_a", type=float, required=True)
    h.add_argument("--q0", type=float, help="also report the alarm rate at this q0")
    h.add_argument("--json", action="store_true")
    h.set_defaults(func=bound)

    c = sub.add_parser("config", help="print the validated run configuration as JSON")
    c.add_argument("--config", help="JSON run configuration")
    c.add_argument("--engine", choices=("bocd", "bocd-ar"))
    _add_hp_args(c)
    c.set_defaults(func=config)

    o = sub.add_parser("oracle")  # debugging aid, not listed in help
    o.add_argument("--len", type=int, required=True)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--variant", choices=("bocd", "bocd-ar"), default="bocd-ar")
    o.add_argument("--config", help="JSON run configuration")
    _add_hp_args(o)
    o.set_defaults(func=oracle)
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "oracle"]
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    warnings.showwarning = _warn_to_stderr
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, InputError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
