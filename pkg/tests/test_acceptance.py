"""Acceptance criteria, one test per criterion.

Each test records a line "CRITERION k: PASS|FAIL detail" that is printed
immediately and collected into the terminal summary.  Time limits are the
stated wall-clock budgets on the machine running the suite.
"""

import itertools
import math
import random
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np

from collatzlab.core import CLASSIC, PRESETS, MapSpec, OrbitBudget, c_power, check_iteration_identity, f_n, iterate_c
from collatzlab.fractran import fractran_step, fractran_to_collatz, prime_game, random_total_game, stream_power_exponents
from collatzlab.orbits import census, exceed_fraction, kappa_estimate, korec_fraction
from collatzlab.renewal import (
    build_bad_set,
    check_renewal_bound,
    decompose_triangles,
    h_increment,
    renewal_constants,
    renewal_walk,
    sample_H_batch,
)
from collatzlab.repro import bounded_starts_divergent_map, four_power_multiples
from collatzlab.stochastic import RngStream, fourier_coefficient, residue_class_check, syracuse_rv_exact, tv_a_vs_geometric
from conftest import ACCEPTANCE_LINES

BUDGET = OrbitBudget(max_steps=100_000)


def record(k, ok, detail, seconds=None, limit=None):
    if limit is not None:
        ok = ok and seconds <= limit
        detail = f"{detail} [{seconds:.2f}s, limit {limit}s]"
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_classic_orbits():
    want7 = [7, 22, 11, 34, 17, 52, 26, 13, 40, 20, 10, 5, 16, 8, 4, 2, 1]
    want42 = [42, 21, 64, 32, 16, 8, 4, 2, 1]
    worst = 0.0
    got = []
    for n in (7, 42, 31):
        t0 = time.perf_counter()
        tr = iterate_c(CLASSIC, n, OrbitBudget(target_floor=1))
        worst = max(worst, time.perf_counter() - t0)
        got.append(tr)
    ok = got[0].values == want7 and got[1].values == want42 and got[2].stop_step == 106
    record(1, ok and worst < 1e-3,
           f"orbit(7), orbit(42) exact; orbit(31) reaches 1 at step {got[2].stop_step}; "
           f"slowest {worst * 1e3:.3f} ms")


def test_criterion_02_prime_game():
    t0 = time.perf_counter()
    exps, steps, status = stream_power_exponents(prime_game(), 4, 2, 8, 10**7)
    ok = exps == [2, 3, 5, 7, 11, 13, 17, 19] and status is None
    record(2, ok, f"exponents {exps} after {steps} steps", time.perf_counter() - t0, 60)


def test_criterion_03_m46a_reaches_three_cycles():
    t0 = time.perf_counter()
    rep = census(PRESETS["m4-6-a"], 1, 10**6, BUDGET, keep_rows=False)
    ok = sorted(rep.cycles) == [2, 38, 119] and rep.resolved_count == 10**6
    record(3, ok, f"cycle minima {sorted(rep.cycles)}, resolved {rep.resolved_count}/10^6",
           time.perf_counter() - t0, 300)


def test_criterion_04_m36_cycles_and_cmin():
    t0 = time.perf_counter()
    rep = census(PRESETS["m3-6"], 1, 10**6, BUDGET, keep_rows=False)
    cycles = sorted(list(c.elements) for c in rep.cycles.values())
    cmax = max(rep.cmin_histogram)
    ok = cycles == [[1, 9, 3], [2, 18, 6]] and cmax <= 18 and rep.resolved_count == 10**6
    record(4, ok, f"cycles {cycles}, max C_min {cmax}", time.perf_counter() - t0, 120)


def test_criterion_05_m46noc_cycles():
    t0 = time.perf_counter()
    rep = census(PRESETS["m4-6-noc"], 1, 10**5, BUDGET, keep_rows=False)
    cycles = sorted(list(c.elements) for c in rep.cycles.values())
    ok = cycles == [[1, 8, 2, 16, 4], [11, 77, 464, 116, 29, 176, 44]] and rep.resolved_count == 10**5
    record(5, ok, f"cycles {cycles}", time.perf_counter() - t0, 60)


def test_criterion_06_m46div_digits_and_bounded_set():
    t0 = time.perf_counter()
    d = len(str(c_power(PRESETS["m4-6-div"], 9, 10**4)))
    bounded = bounded_starts_divergent_map(10**4)
    ok = d == 882 and bounded == four_power_multiples(10**4)
    record(6, ok, f"C^10000(9) has {d} digits; {len(bounded)} bounded starts, all of the form N*4^k with N <= 8",
           time.perf_counter() - t0, 10)


def test_criterion_07_m1215div_digits_and_exceedance():
    t0 = time.perf_counter()
    spec = PRESETS["m12-15-div"]
    before = c_power(spec, 51, 10**5 - 1)
    d = len(str(c_power(spec, before, 1)))
    frac = float(exceed_fraction(spec, 10**4, 10**50, 10**4))
    ok = d == 1055 and abs(frac - 0.66) <= 0.05
    record(7, ok, f"C^100000(51) has {d} digits (C^99999(51) has {len(str(before))}), want 1055; "
                  f"share of N <= 10^4 exceeding 10^50 = {frac:.4f}, want 0.66 +- 0.05",
           time.perf_counter() - t0, 600)


def test_criterion_08_m1215_cycle_minima():
    t0 = time.perf_counter()
    rep = census(PRESETS["m12-15"], 1, 10**4, BUDGET, keep_rows=False)
    ok = sorted(rep.cycles) == [1, 226] and rep.resolved_count == 10**4
    record(8, ok, f"cycle minima {sorted(rep.cycles)}", time.perf_counter() - t0, 120)


def test_criterion_09_kappa_3x_minus_1():
    t0 = time.perf_counter()
    spec = PRESETS["3x-1"]
    k1 = float(kappa_estimate(spec, 1, 10**5, BUDGET))
    k7 = float(kappa_estimate(spec, 7, 10**5, BUDGET))
    ok = abs(k1 - 0.33) <= 0.03 and abs(k7 - 0.27) <= 0.03
    record(9, ok, f"kappa(1) = {k1:.4f}, kappa(7) = {k7:.4f}", time.perf_counter() - t0, 60)


def test_criterion_10_korec_fraction():
    t0 = time.perf_counter()
    vals = [korec_fraction(CLASSIC, 0.1, x, BUDGET).natural for x in (10**4, 10**5, 10**6)]
    ok = vals[-1] >= Fraction(95, 100) and vals == sorted(vals)
    record(10, ok, "fractions at 10^4, 10^5, 10^6: " + ", ".join(f"{float(v):.6f}" for v in vals),
           time.perf_counter() - t0, 300)


def test_criterion_11_structural_exactness():
    t0 = time.perf_counter()
    rnd = random.Random(11)
    maps = [CLASSIC, PRESETS["3x-1"], PRESETS["m3-2"], MapSpec(3, 5, (1, 2)), MapSpec(5, 7, (3, 6, 4, 2))]
    ident = 0
    for _ in range(10**4):
        spec = rnd.choice(maps)
        n = rnd.randint(1, 10**12)
        if n % spec.p == 0:
            n += 1
        ident += check_iteration_identity(spec, n, rnd.randint(1, 40))
    rec = 0
    for _ in range(10**3):
        spec = rnd.choice(maps)
        k = rnd.randint(1, 15)
        a = [rnd.randint(1, 6) for _ in range(k)]
        R = [rnd.choice(spec.r) for _ in range(k)]
        i = rnd.randint(0, k)
        rhs = f_n(spec, a[i:], R[i:]) + Fraction(spec.q ** (k - i), spec.p ** sum(a[i:])) * f_n(spec, a[:i], R[:i])
        rec += f_n(spec, a, R) == rhs
    checks = [(spec, cap) for spec, cap in ((CLASSIC, 10), (PRESETS["m3-2"], 6), (PRESETS["3x-1"], 10),
                                             (MapSpec(3, 7, (2, 1)), 6))]
    residue = [residue_class_check(spec, k, cap).passed for spec, cap in checks for k in range(5)]
    ok = ident == 10**4 and rec == 10**3 and all(residue)
    record(11, ok, f"iteration identity {ident}/10000, F_n recursion {rec}/1000, "
                   f"residue classes {sum(residue)}/{len(residue)} (4 maps, k = 0..4)",
           time.perf_counter() - t0, 120)


def test_criterion_12_probabilistic_suite():
    t0 = time.perf_counter()
    tv = tv_a_vs_geometric(CLASSIC, 4, 12)
    laws = {n: syracuse_rv_exact(CLASSIC, n) for n in range(1, 5)}
    marginal = all(laws[n].reduce_mod(m).weights == laws[m].weights
                   for n in range(2, 5) for m in range(1, n)) and all(l.total() == 1 for l in laws.values())
    four = [abs(fourier_coefficient(CLASSIC, n, 1).value) for n in range(2, 7)]
    decay = all(b <= a for a, b in zip(four, four[1:])) and max(four) <= 0.9
    ok = tv <= 0.02 and marginal and decay
    record(12, ok, f"TV(4, 12) = {float(tv):.6f}; marginals consistent: {marginal}; "
                   f"|E chi(S_n)| n=2..6: " + ", ".join(f"{v:.4f}" for v in four),
           time.perf_counter() - t0, 120)


def test_criterion_13_renewal_suite():
    t0 = time.perf_counter()
    moments = []
    for p in (2, 3, 5):
        lam, mu = renewal_constants(p)
        J, L = sample_H_batch(p, 10**5, RngStream(100 + p))
        for x, want in ((J, lam), (L, 2 * mu * lam)):
            z = abs(x.mean() - float(want)) / (x.std() / math.sqrt(x.size))
            moments.append(z)
    covers = []
    for nq in (8, 120):
        covers.append(decompose_triangles(build_bad_set(CLASSIC, 1, nq, 0.01, (60, 60))).exact_cover)
    bad = build_bad_set(CLASSIC, 1, 120, 0.01, (60, 60))
    stats = renewal_walk(h_increment(2), bad, 4000, 10**4, 0.01, RngStream(13),
                         checkpoints=(500, 1000, 2000, 4000))
    rep = check_renewal_bound(stats, 2.0, tol=0.2)
    ok = max(moments) <= 3 and all(covers) and rep.stable
    record(13, ok, f"moment z-scores max {max(moments):.2f}; exact covers {covers}; "
                   f"C envelope {[round(c, 3) for c in rep.envelope]}, variation {rep.relative_variation:.3f}",
           time.perf_counter() - t0, 600)


def test_criterion_14_fractran_bridge():
    t0 = time.perf_counter()
    rng = np.random.default_rng(14)
    agree = 0
    for _ in range(20):
        F = random_total_game(rng, size=int(rng.integers(1, 6)))
        T = fractran_to_collatz(F)
        agree += all(T.step(n) == fractran_step(F, n) for n in range(1, 10**4 + 1))
    record(14, agree == 20, f"{agree}/20 random total games agree on N <= 10^4",
           time.perf_counter() - t0, 30)


def test_criterion_15_repro_deterministic(tmp_path):
    t0 = time.perf_counter()
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.json"
        res = subprocess.run([sys.executable, "-m", "collatzlab.cli", "repro", "section9", "--seed", "7",
                              "--out", str(path)], capture_output=True)
        assert res.returncode == 0, res.stderr
        outs.append(path.read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    record(15, ok, f"two runs, {len(outs[0])} bytes each, identical: {outs[0] == outs[1]}",
           time.perf_counter() - t0)
