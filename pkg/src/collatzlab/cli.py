"""Command-line front end.

Every report is JSON (or CSV for tabular output) with a header holding the
resolved configuration, the package version and the seed, so identical
arguments give identical bytes.  Wall-clock times are added only with
--timing.

Exit codes: 0 success, 1 usage error, 2 result limited by a budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from fractions import Fraction

import numpy as np

from collatzlab import __version__, kernels
from collatzlab.core import (
    PRESETS,
    MapSpec,
    OrbitBudget,
    Status,
    iterate_c,
    iterate_s,
    validate_conditions,
)

EXIT_OK, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_map(text: str) -> MapSpec:
    """A preset name, a path to a JSON file, or inline JSON."""
    if text in PRESETS:
        return PRESETS[text]
    try:
        if os.path.exists(text):
            with open(text) as fh:
                return MapSpec.from_json(fh.read())
        if text.lstrip().startswith("{"):
            return MapSpec.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed map spec {text!r}: {exc}") from exc
    raise UsageError(f"unknown map {text!r}; presets: {', '.join(PRESETS)}")


def parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"range must look like LO:HI, got {text!r}") from exc
    if not 1 <= lo <= hi:
        raise UsageError(f"need 1 <= LO <= HI, got {text!r}")
    return lo, hi


def parse_window(text: str) -> tuple[int, int]:
    try:
        J, L = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise UsageError(f"window must look like JxL, got {text!r}") from exc
    return J, L


def budget_of(args) -> OrbitBudget:
    try:
        return OrbitBudget(
            max_steps=args.max_steps,
            max_digits=args.max_digits,
            target_floor=getattr(args, "floor", None),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _encode(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def header(args) -> dict:
    skip = {"func", "out", "format", "timing", "threads"}
    config = {k: v for k, v in sorted(vars(args).items()) if k not in skip and not k.startswith("_")}
    out = {"tool": "collatzlab", "version": __version__, "config": config,
           "seed": getattr(args, "seed", None)}
    if getattr(args, "timing", False):
        out["wall_clock_seconds"] = round(time.perf_counter() - args._t0, 3)
    return out


def emit(args, body: dict, rows=None) -> None:
    """Write the report as JSON, or `rows` as CSV when --format csv."""
    fmt = getattr(args, "format", "json")
    if fmt == "csv":
        if rows is None:
            raise UsageError("this command has no tabular output; use --format json")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in rows:
            w.writerow(row)
        text = buf.getvalue()
    else:
        report = {"header": header(args), **body}
        text = json.dumps(report, indent=2, sort_keys=True, default=_encode) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _spec_block(spec):
    return {"map": spec.to_dict(), "conditions": validate_conditions(spec).to_dict()}


# subcommands --------------------------------------------------------------


def cmd_orbit(args):
    spec = load_map(args.map)
    budget = budget_of(args)
    if args.syracuse:
        trace, vt = iterate_s(spec, args.start, budget)
        extra = {"a": vt.a, "R": vt.R}
    else:
        trace = iterate_c(spec, args.start, budget)
        extra = {}
    body = {
        **_spec_block(spec),
        "start": str(args.start),
        "status": trace.status.value,
        "steps": trace.stop_step,
        "min_value": str(trace.min_value),
        "final": str(trace.final),
        "final_digits": len(str(trace.final)),
        **extra,
    }
    if args.show_values:
        body["values"] = [str(v) for v in trace.values]
    emit(args, body, rows=[("k", "value")] + [(k, v) for k, v in enumerate(trace.values)])
    return EXIT_BUDGET if trace.status.budget_limited else EXIT_OK


def cmd_census(args, cycles_only=False):
    from collatzlab.orbits import census

    spec = load_map(args.map)
    lo, hi = parse_range(args.range)
    budget = budget_of(args)
    rep = census(spec, lo, hi, budget, threads=args.threads, keep_rows=args.format == "csv")
    body = rep.to_dict()
    if cycles_only:
        body = {k: body[k] for k in ("map", "range", "budget", "cycles", "cycle_minima",
                                     "resolved_count", "divergence_suspects")}
    emit(args, body, rows=rep.csv_rows() if rep.rows is not None else None)
    return EXIT_BUDGET if rep.divergence_suspects else EXIT_OK


def cmd_first_passage(args):
    from collatzlab.orbits import first_passage

    spec = load_map(args.map)
    fp = first_passage(spec, args.start, args.x, budget_of(args))
    emit(args, {**_spec_block(spec), "start": str(args.start), "x": args.x,
                "time": fp.time, "passage": str(fp.passage), "resolved": fp.resolved})
    return EXIT_OK if fp.resolved else EXIT_BUDGET


def cmd_kappa(args):
    from collatzlab.orbits import kappa_estimate

    spec = load_map(args.map)
    accel = {"auto": None, "accelerated": True, "c": False}[args.form]
    k = kappa_estimate(spec, args.anchor, args.x, budget_of(args), mode=args.mode,
                       accelerated=accel, threads=args.threads)
    emit(args, {**_spec_block(spec), "anchor": args.anchor, "x": args.x,
                "kappa": float(k), "kappa_exact": str(k)})
    return EXIT_OK


def cmd_korec(args):
    from collatzlab.orbits import korec_fraction

    spec = load_map(args.map)
    rep = validate_conditions(spec)
    warn = [] if (rep.cond_a and rep.cond_b and rep.cond_c and min(spec.r) >= 0) else [
        "map is outside the hypotheses (a), (b), (c), r >= 0; the estimate is still computed"]
    d = korec_fraction(spec, args.c, args.x, budget_of(args), threads=args.threads)
    emit(args, {**_spec_block(spec), "c": args.c, "density": d.to_dict(), "warnings": warn})
    return EXIT_OK


def cmd_search(args):
    from collatzlab.orbits import random_map_search

    reports = random_map_search(args.pmax, args.qmax, args.trials, budget_of(args),
                                seed=args.seed, n_scan=args.n_scan, threads=args.threads)
    bad = [r.to_dict() for r in reports if r.violations]
    emit(args, {"maps_scanned": len(reports), "maps_with_violations": len(bad),
                "violations": bad, "maps": [r.to_dict() for r in reports]})
    return EXIT_OK


def cmd_tv(args):
    from collatzlab.stochastic import tv_a_vs_geometric

    spec = load_map(args.map)
    tv = tv_a_vs_geometric(spec, args.n, args.m)
    emit(args, {**_spec_block(spec), "n": args.n, "m": args.m, "tv": float(tv), "tv_exact": str(tv)})
    return EXIT_OK


def cmd_syracuse_law(args):
    from collatzlab.stochastic import syracuse_rv_exact

    spec = load_map(args.map)
    law = syracuse_rv_exact(spec, args.n, exact=None if not args.float else False)
    emit(args, {**_spec_block(spec), "n": args.n, "law": law.to_dict()}, rows=law.csv_rows())
    return EXIT_OK


def cmd_fourier(args):
    from collatzlab.stochastic import RngStream, fourier_coefficient

    spec = load_map(args.map)
    est = fourier_coefficient(spec, args.n, args.xi, args.method, args.trials, RngStream(args.seed))
    emit(args, {**_spec_block(spec), "n": args.n, "xi": args.xi, "coefficient": est.to_dict()})
    return EXIT_OK


def cmd_oscillation(args):
    from collatzlab.stochastic import oscillation, syracuse_rv_exact

    spec = load_map(args.map)
    val = oscillation(syracuse_rv_exact(spec, args.n), args.m)
    emit(args, {**_spec_block(spec), "n": args.n, "m": args.m, "oscillation": float(val),
                "oscillation_exact": str(val) if isinstance(val, Fraction) else None})
    return EXIT_OK


def cmd_renewal(args):
    from collatzlab import renewal
    from collatzlab.stochastic import RngStream

    spec = load_map(args.map)
    window = parse_window(args.window)
    bad = renewal.build_bad_set(spec, args.xi, args.nq, args.epsilon, window)
    dec = renewal.decompose_triangles(bad)
    checkpoints = sorted({int(v) for v in args.checkpoints.split(",")} | {args.steps}) if args.checkpoints else [args.steps]
    stats = renewal.renewal_walk(renewal.h_increment(spec.p), bad, args.steps, args.trials,
                                 args.epsilon, RngStream(args.seed), checkpoints=checkpoints)
    body = {**_spec_block(spec), "bad_set": bad.to_dict(), "decomposition": dec.to_dict(),
            "walk": stats.to_dict()}
    if len(checkpoints) >= 3:
        body["bound"] = renewal.check_renewal_bound(stats, args.A).to_dict()
    emit(args, body)
    return EXIT_OK


def cmd_fractran(args):
    from collatzlab import fractran

    F = fractran.prime_game() if args.program == "prime" else fractran.load_program(args.program)
    if args.extract_base:
        exps, steps, status = fractran.stream_power_exponents(
            F, args.start, args.extract_base, args.count, args.max_steps)
        emit(args, {"program": F.to_text().split(), "start": str(args.start),
                    "base": args.extract_base, "exponents": exps, "steps": steps,
                    "status": status.value if status else "complete"},
             rows=[("index", "exponent")] + list(enumerate(exps)))
        return EXIT_BUDGET if status == Status.BUDGET_STEPS else EXIT_OK
    trace = fractran.fractran_run(F, args.start, OrbitBudget(max_steps=args.max_steps))
    emit(args, {"program": F.to_text().split(), "start": str(args.start),
                "status": trace.status.value, "steps": trace.stop_step,
                "final": str(trace.final)},
         rows=[("k", "value")] + list(enumerate(trace.values)))
    return EXIT_BUDGET if trace.status.budget_limited else EXIT_OK


def cmd_repro(args):
    from collatzlab.repro import run_suite

    rows = run_suite(seed=args.seed, full=args.full)
    body = {
        "suite": args.suite,
        "backend": kernels.backend(),
        "rows": [r.to_dict(args.timing) for r in rows],
        "passed": sum(r.passed for r in rows),
        "failed": sum(not r.passed for r in rows),
    }
    emit(args, body, rows=[("id", "pass", "expected", "measured")] + [
        (r.id, "pass" if r.passed else "FAIL", json.dumps(r.expected), json.dumps(r.measured))
        for r in rows])
    return EXIT_OK


# parser -------------------------------------------------------------------


def _common(p, budget=True, steps=10_000, digits=None):
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: COLLATZLAB_THREADS or all cores)")
    p.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    if budget:
        p.add_argument("--max-steps", type=int, default=steps)
        p.add_argument("--max-digits", type=int, default=digits)


def _map(p, default=None):
    p.add_argument("--map", default=default, required=default is None,
                   help="preset name, JSON file, or inline JSON")


def build_parser() -> argparse.ArgumentParser:
    ap = Parser(prog="collatzlab", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"collatzlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("orbit", help="iterate C (or S) from one start")
    _map(p)
    p.add_argument("--start", type=int, required=True)
    p.add_argument("--floor", type=int, default=None, help="stop at the first iterate <= FLOOR")
    p.add_argument("--syracuse", action="store_true", help="iterate S and report valuations")
    p.add_argument("--show-values", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_orbit)

    for name, only in (("census", False), ("cycles", True)):
        p = sub.add_parser(name, help="classify every start in a range" if not only else
                           "cycle inventory of a range")
        _map(p)
        p.add_argument("--range", required=True, help="LO:HI")
        _common(p, steps=100_000)
        p.set_defaults(func=lambda a, only=only: cmd_census(a, only))

    p = sub.add_parser("first-passage", help="first time the S-orbit drops to <= x")
    _map(p)
    p.add_argument("--start", type=int, required=True)
    p.add_argument("--x", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_first_passage)

    p = sub.add_parser("kappa", help="share of N <= x feeding into an anchor value")
    _map(p, "3x-1")
    p.add_argument("--anchor", type=int, required=True)
    p.add_argument("--x", type=int, default=100_000)
    p.add_argument("--mode", choices=("entry", "visit"), default="entry")
    p.add_argument("--form", choices=("auto", "accelerated", "c"), default="auto")
    _common(p, steps=100_000)
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("korec", help="share of N <= x with C_min(N) < N^(gamma + c)")
    _map(p, "classic")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--x", type=int, default=1_000_000)
    _common(p, steps=100_000)
    p.set_defaults(func=cmd_korec)

    p = sub.add_parser("search", help="random maps with (a), (b), (c): look for large excursions")
    p.add_argument("--pmax", type=int, default=20)
    p.add_argument("--qmax", type=int, default=20)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--n-scan", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=7)
    _common(p, steps=1000, digits=10)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("tv", help="TV between valuation vectors and i.i.d. geometrics")
    _map(p, "classic")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    _common(p, budget=False)
    p.set_defaults(func=cmd_tv)

    p = sub.add_parser("syracuse-law", help="exact law of S_n mod q^n")
    _map(p, "classic")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--float", action="store_true", help="float dynamic programming")
    _common(p, budget=False)
    p.set_defaults(func=cmd_syracuse_law)

    p = sub.add_parser("fourier", help="E[exp(-2 pi i xi S_n / q^n)]")
    _map(p, "classic")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--xi", type=int, required=True)
    p.add_argument("--method", choices=("exact", "montecarlo"), default="exact")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=7)
    _common(p, budget=False)
    p.set_defaults(func=cmd_fourier)

    p = sub.add_parser("oscillation", help="distance of the S_n law from its q^m-periodization")
    _map(p, "classic")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    _common(p, budget=False)
    p.set_defaults(func=cmd_oscillation)

    p = sub.add_parser("renewal", help="bad set, triangles and the 2D renewal walk")
    _map(p, "classic")
    p.add_argument("--xi", type=int, default=1)
    p.add_argument("--nq", type=int, default=120, help="theta uses residues mod q^NQ")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--window", default="60x60")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--checkpoints", default="", help="comma-separated n values for the bound fit")
    p.add_argument("--A", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=7)
    _common(p, budget=False)
    p.set_defaults(func=cmd_renewal)

    p = sub.add_parser("fractran", help="FRACTRAN interpreter")
    fsub = p.add_subparsers(dest="action", required=True, parser_class=Parser)
    r = fsub.add_parser("run", help="run a program")
    r.add_argument("--program", default="prime", help="file with one A/B per line, or 'prime'")
    r.add_argument("--start", type=int, default=4)
    r.add_argument("--max-steps", type=int, default=2_000_000)
    r.add_argument("--extract-base", type=int, default=None)
    r.add_argument("--count", type=int, default=8, help="powers to extract before stopping")
    _common(r, budget=False)
    r.set_defaults(func=cmd_fractran)

    p = sub.add_parser("repro", help="rerun the numerical experiments as a pass/fail table")
    p.add_argument("suite", choices=("section9",))
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--full", action="store_true", help="also run the N <= 1e5 exceedance scan")
    _common(p, budget=False)
    p.set_defaults(func=cmd_repro)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if os.environ.get("COLLATZLAB_THREADS"):
        args.threads = kernels.default_threads()
    args._t0 = time.perf_counter()
    try:
        code = args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"collatzlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
