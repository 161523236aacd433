"""Scripted reruns of the numerical experiments on the named maps, as a pass/fail table."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Any

import numpy as np

from collatzlab import kernels
from collatzlab._pykernels import CYCLE
from collatzlab.core import PRESETS, OrbitBudget, c_power, c_step
from collatzlab.orbits import census, exceed_fraction, random_map_search


@dataclass
class Row:
    id: str
    description: str
    expected: Any
    measured: Any
    passed: bool
    seconds: float | None = None

    def to_dict(self, timing: bool = False) -> dict:
        d = {"id": self.id, "description": self.description, "expected": self.expected,
             "measured": self.measured, "pass": self.passed}
        if timing:
            d["seconds"] = round(self.seconds, 3)
        return d


def digits(n: int) -> int:
    return len(str(n))


def bounded_starts_divergent_map(x: int, max_steps: int = 10_000, max_digits: int = 60) -> list[int]:
    spec = PRESETS["m4-6-div"]
    rows = kernels.scan_range(spec.p, spec.q, spec.r, 1, x, max_steps, 10**max_digits)
    return (np.flatnonzero(rows["status"] == CYCLE) + 1).tolist()


def four_power_multiples(x: int) -> list[int]:
    out = set()
    for n in range(1, 9):
        while n <= x:
            out.add(n)
            n *= 4
    return sorted(out)


def _cycles(spec, hi, max_steps):
    rep = census(spec, 1, hi, OrbitBudget(max_steps=max_steps), keep_rows=False)
    return rep


def experiments(seed: int, full: bool = False):
    """(id, description, callable returning (expected, measured, passed))."""

    def m46a():
        rep = _cycles(PRESETS["m4-6-a"], 10**6, 100_000)
        got = sorted(rep.cycles)
        return [2, 38, 119], got, got == [2, 38, 119] and rep.resolved_count == 10**6

    def m46div_digits():
        d = digits(c_power(PRESETS["m4-6-div"], 9, 10**4))
        return 882, d, d == 882

    def m46div_bounded():
        got = bounded_starts_divergent_map(10**4)
        want = four_power_multiples(10**4)
        return len(want), len(got), got == want

    def m1215div_digits():
        before = c_power(PRESETS["m12-15-div"], 51, 10**5 - 1)
        d = digits(c_step(PRESETS["m12-15-div"], before))
        return 1055, {"C^100000(51)": d, "C^99999(51)": digits(before)}, d == 1055

    def m1215div_fraction(x):
        def run():
            f = float(exceed_fraction(PRESETS["m12-15-div"], x, 10**50, 10**4))
            return "0.66 +- 0.05", round(f, 5), abs(f - 0.66) <= 0.05
        return run

    def m1215():
        rep = _cycles(PRESETS["m12-15"], 10**4, 100_000)
        got = sorted(rep.cycles)
        return [1, 226], got, got == [1, 226] and rep.resolved_count == 10**4

    def m36():
        rep = _cycles(PRESETS["m3-6"], 10**6, 100_000)
        cyc = sorted(list(c.elements) for c in rep.cycles.values())
        cmax = max(rep.cmin_histogram)
        want = [[1, 9, 3], [2, 18, 6]]
        return {"cycles": want, "max_c_min": "<= 18"}, {"cycles": cyc, "max_c_min": cmax}, (
            cyc == want and cmax <= 18 and rep.resolved_count == 10**6)

    def m46noc():
        rep = _cycles(PRESETS["m4-6-noc"], 10**5, 100_000)
        cyc = sorted(list(c.elements) for c in rep.cycles.values())
        want = [[1, 8, 2, 16, 4], [11, 77, 464, 116, 29, 176, 44]]
        return want, cyc, cyc == want and rep.resolved_count == 10**5

    def search():
        reports = random_map_search(20, 20, 5, OrbitBudget(max_steps=1000, max_digits=10),
                                    seed=seed, n_scan=10**4)
        hit = [r for r in reports if r.violations]
        bad = sum(len(r.violations) for r in hit)
        measured = {"maps": len(reports), "maps_with_violations": len(hit), "violations": bad}
        if hit:
            measured["first"] = {"p": hit[0].p, "q": hit[0].q, "r": list(hit[0].r),
                                 "N": hit[0].violations[0]}
        return {"violations": 0}, measured, bad == 0

    exps = [
        ("m46a-cycles", "(4,6,[26,20,18]) N<=1e6: cycle minima", m46a),
        ("m46div-digits", "(4,6,[-2,-8,-14]) digits of C^1e4(9)", m46div_digits),
        ("m46div-bounded", "(4,6,[-2,-8,-14]) bounded N<=1e4 are N*4^k, N<=8", m46div_bounded),
        ("m1215div-digits", "(12,15,r') digits of C^1e5(51)", m1215div_digits),
        ("m1215div-fraction-1e4", "(12,15,r') share of N<=1e4 exceeding 1e50 within 1e4 steps",
         m1215div_fraction(10**4)),
    ]
    if full:
        exps.append(("m1215div-fraction-1e5",
                     "(12,15,r') share of N<=1e5 exceeding 1e50 within 1e4 steps",
                     m1215div_fraction(10**5)))
    exps += [
        ("m1215-cycles", "(12,15,r) N<=1e4: cycle minima", m1215),
        ("m36", "(3,6,[3,6]) N<=1e6: cycles and C_min bound", m36),
        ("m46noc", "(4,6,[2,4,11]) N<=1e5: cycles", m46noc),
        ("search", "random maps with (a),(b),(c), p,q<=20: orbits past 1e10 in 1e3 steps", search),
    ]
    return exps


def run_suite(seed: int = 7, full: bool = False, only: list[str] | None = None) -> list[Row]:
    rows = []
    for eid, desc, fn in experiments(seed, full):
        if only and eid not in only:
            continue
        t = time.perf_counter()
        expected, measured, ok = fn()
        rows.append(Row(eid, desc, expected, measured, bool(ok), time.perf_counter() - t))
    return rows
