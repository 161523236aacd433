"""Cycle detection, range censuses, first passage, basin densities and map search."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Callable

import numpy as np

from collatzlab import kernels
from collatzlab._pykernels import CYCLE, LIMIT, STEPS, make_step, orbit_summary
from collatzlab.core import MapSpec, OrbitBudget, Status, c_step, s_step, validate_conditions


@dataclass(frozen=True)
class CycleRecord:
    elements: tuple[int, ...]

    @classmethod
    def canonical(cls, values) -> CycleRecord:
        values = list(values)
        i = values.index(min(values))
        return cls(tuple(values[i:] + values[:i]))

    @property
    def length(self) -> int:
        return len(self.elements)

    @property
    def min_element(self) -> int:
        return self.elements[0]

    def to_dict(self) -> dict:
        return {"min": str(self.min_element), "length": self.length,
                "elements": [str(v) for v in self.elements]}


@dataclass(frozen=True)
class Divergent:
    status: Status
    steps: int
    c_min: int


def cycle_from(spec: MapSpec, start: int, length: int | None = None, accelerated=False) -> CycleRecord:
    """Cycle through `start`, which must lie on a cycle."""
    step = make_step(spec.p, spec.q, spec.r, accelerated)
    vals = [start]
    v = step(start)
    while v != start and (length is None or len(vals) < length):
        vals.append(v)
        v = step(v)
    if v != start:
        raise ValueError(f"{start} is not on a cycle of length {length}")
    return CycleRecord.canonical(vals)


_STATUS = {STEPS: Status.BUDGET_STEPS, LIMIT: Status.BUDGET_DIGITS}


def detect_cycle(spec: MapSpec, n: int, budget: OrbitBudget) -> CycleRecord | Divergent:
    """Eventual cycle of the C-orbit of n by Brent's method, or the budget that stopped it."""
    if n < 1:
        raise ValueError("start must be a positive integer")
    step = make_step(spec.p, spec.q, spec.r, False)
    st, steps, cmin, cyc_min, lam, *_ = orbit_summary(
        step, n, budget.max_steps, budget.value_limit, 0
    )
    if st != CYCLE:
        return Divergent(_STATUS[st], steps, cmin)
    return cycle_from(spec, cyc_min, lam)


@dataclass
class CensusReport:
    spec: MapSpec
    lo: int
    hi: int
    budget: OrbitBudget
    cycles: dict[int, CycleRecord] = field(default_factory=dict)
    resolved_count: int = 0
    divergence_suspects: dict[int, Status] = field(default_factory=dict)
    cmin_histogram: Counter = field(default_factory=Counter)
    rows: dict[str, np.ndarray] | None = None

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def fraction_below(self, f: Callable[[int], float]) -> Fraction:
        """Share of resolved starts N with C_min(N) < f(N)."""
        if self.rows is None:
            raise ValueError("report was built without per-start rows")
        ok = 0
        cmin = self.rows["cmin"]
        status = self.rows["status"]
        for i in range(self.size):
            if status[i] == CYCLE and cmin[i] < f(self.lo + i):
                ok += 1
        return Fraction(ok, self.size)

    def merge(self, other: CensusReport) -> CensusReport:
        """Union of two reports over adjacent ranges (either order)."""
        if other.spec != self.spec or other.budget != self.budget:
            raise ValueError("can only merge censuses of the same map and budget")
        a, b = (self, other) if self.lo <= other.lo else (other, self)
        if a.hi + 1 != b.lo:
            raise ValueError("ranges must be adjacent")
        rows = None
        if a.rows is not None and b.rows is not None:
            rows = {}
            for k in a.rows:
                x, y = a.rows[k], b.rows[k]
                if x.dtype == object or y.dtype == object:
                    x, y = x.astype(object), y.astype(object)
                rows[k] = np.concatenate([x, y])
        return CensusReport(
            spec=self.spec,
            lo=a.lo,
            hi=b.hi,
            budget=self.budget,
            cycles=dict(sorted({**a.cycles, **b.cycles}.items())),
            resolved_count=a.resolved_count + b.resolved_count,
            divergence_suspects={**a.divergence_suspects, **b.divergence_suspects},
            cmin_histogram=a.cmin_histogram + b.cmin_histogram,
            rows=rows,
        )

    def csv_rows(self):
        yield ("N", "status", "cycle_min", "c_min", "steps")
        names = {CYCLE: "cycle", STEPS: "budget_steps", LIMIT: "budget_digits"}
        r = self.rows
        for i in range(self.size):
            st = int(r["status"][i])
            cm = r["cycle_min"][i] if st == CYCLE else ""
            yield (self.lo + i, names[st], cm, r["cmin"][i], r["steps"][i])

    def to_dict(self) -> dict:
        return {
            "map": self.spec.to_dict(),
            "range": [self.lo, self.hi],
            "budget": self.budget.to_dict(),
            "cycles": [c.to_dict() for c in self.cycles.values()],
            "cycle_minima": [str(k) for k in self.cycles],
            "resolved_count": self.resolved_count,
            "divergence_suspects": len(self.divergence_suspects),
            "first_suspects": [
                {"N": n, "status": s.value}
                for n, s in sorted(self.divergence_suspects.items())[:20]
            ],
            "max_c_min": str(max(self.cmin_histogram)) if self.cmin_histogram else None,
            "cmin_histogram": {str(k): v for k, v in sorted(self.cmin_histogram.items())[:200]},
        }


def _report_from_rows(spec, lo, hi, budget, rows, keep_rows) -> CensusReport:
    status = rows["status"]
    resolved = status == CYCLE
    rep = CensusReport(spec, lo, hi, budget, resolved_count=int(resolved.sum()))
    for i in np.flatnonzero(~resolved):
        rep.divergence_suspects[lo + int(i)] = _STATUS[int(status[i])]
    cm = rows["cmin"][resolved]
    if cm.dtype != object:
        vals, counts = np.unique(cm, return_counts=True)
        rep.cmin_histogram = Counter(dict(zip(vals.tolist(), counts.tolist())))
    else:
        rep.cmin_histogram = Counter(int(v) for v in cm)
    mins = rows["cycle_min"][resolved]
    lens = rows["cycle_len"][resolved]
    seen = {}
    for m, L in zip(mins.tolist(), lens.tolist()):
        if m not in seen:
            seen[m] = L
    for m in sorted(seen):
        rep.cycles[m] = cycle_from(spec, m, seen[m])
    if keep_rows:
        rep.rows = rows
    return rep


def census(
    spec: MapSpec,
    lo: int,
    hi: int,
    budget: OrbitBudget,
    threads: int | None = None,
    keep_rows: bool = True,
) -> CensusReport:
    """Classify every start in [lo, hi] by its eventual cycle or the budget it hit."""
    rows = kernels.scan_range(
        spec.p, spec.q, spec.r, lo, hi, budget.max_steps, budget.value_limit, threads=threads
    )
    return _report_from_rows(spec, lo, hi, budget, rows, keep_rows)


@dataclass(frozen=True)
class FirstPassage:
    time: int | None  # None: not reached within the budget
    passage: int  # S^T(N), or 1 by the S^inf = 1 convention
    resolved: bool


def first_passage(spec: MapSpec, n: int, x: int, budget: OrbitBudget) -> FirstPassage:
    """T_x(n) = first k with S^k(n) <= x, and the value S^T(n) reached there."""
    if n % spec.p == 0:
        raise ValueError(f"start must not be divisible by p={spec.p}")
    limit = budget.value_limit
    k = 0
    while n > x:
        if budget.max_steps is not None and k >= budget.max_steps:
            return FirstPassage(None, 1, False)
        if limit is not None and n >= limit:
            return FirstPassage(None, 1, False)
        n = s_step(spec, n)[0]
        k += 1
    return FirstPassage(k, n, True)


def kappa_estimate(
    spec: MapSpec,
    a: int,
    x: int,
    budget: OrbitBudget,
    mode: str = "entry",
    accelerated: bool | None = None,
    threads: int | None = None,
) -> Fraction:
    """Share of N <= x feeding into the anchor value a.

    mode="visit" counts orbits that pass through a.  mode="entry" counts orbits
    whose first value on their eventual cycle is a; for anchors off every cycle
    the two coincide, on a cycle "entry" splits the basin among its elements.
    accelerated (default: when condition (c) holds) iterates N/p, (qN+r(j))/p,
    which has the same minima as C but skips the intermediate multiples of p.
    """
    if a < 1:
        raise ValueError("anchor must be positive")
    if mode not in ("entry", "visit"):
        raise ValueError(f"unknown mode {mode!r}")
    if accelerated is None:
        accelerated = validate_conditions(spec).cond_c
    rows = kernels.scan_range(
        spec.p, spec.q, spec.r, 1, x, budget.max_steps, budget.value_limit,
        anchor=a, accelerated=accelerated, threads=threads,
    )
    if mode == "visit":
        count = int(rows["hit"].astype(bool).sum())
    else:
        resolved = rows["status"] == CYCLE
        entry = rows["entry"]
        count = int(np.count_nonzero(resolved & (entry == a)))
    return Fraction(count, x)


@dataclass(frozen=True)
class DensityEstimate:
    x: int
    natural: Fraction
    logarithmic: float

    def to_dict(self) -> dict:
        return {"x": self.x, "natural": float(self.natural),
                "natural_exact": str(self.natural), "logarithmic": self.logarithmic}


def density(indicator: Callable[[int], bool], x: int) -> DensityEstimate:
    """Finite-x natural and logarithmic densities of {M : indicator(M)}."""
    if x < 2:
        raise ValueError("x must be >= 2")
    members = [m for m in range(1, x + 1) if indicator(m)]
    return _density_of(members, x)


def density_from_mask(mask: np.ndarray) -> DensityEstimate:
    """Densities for a boolean membership vector over 1..len(mask)."""
    x = len(mask)
    if x < 2:
        raise ValueError("x must be >= 2")
    members = np.flatnonzero(mask) + 1
    return _density_of(members.tolist(), x)


def _density_of(members, x):
    log_sum = math.fsum(1.0 / m for m in members)
    return DensityEstimate(x, Fraction(len(members), x), log_sum / math.log(x))


def _below_power(cmin: int, n: int, exponent: Decimal) -> bool:
    """cmin < n**exponent, decided in 60-digit decimal arithmetic."""
    with localcontext() as ctx:
        ctx.prec = 60
        return Decimal(cmin).ln() < exponent * Decimal(n).ln()


def _gamma_decimal(spec: MapSpec) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 60
        p, q = Decimal(spec.p), Decimal(spec.q)
        return (p - 1) / p * q.ln() / p.ln()


def korec_fraction(
    spec: MapSpec, c: float, x: int, budget: OrbitBudget, threads: int | None = None
) -> DensityEstimate:
    """Densities up to x of {N : C_min(N) < N^(gamma + c)}.

    C_min is taken over the budgeted orbit prefix, an upper bound for the true
    minimum, so the count never overstates the set.  The threshold is compared
    in float logs; anything within 1e-9 of the boundary is re-decided in
    60-digit decimals.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    expo = _gamma_decimal(spec) + Decimal(repr(c))
    rows = kernels.scan_range(
        spec.p, spec.q, spec.r, 1, x, budget.max_steps, budget.value_limit, threads=threads
    )
    cmin = rows["cmin"]
    n = np.arange(1, x + 1, dtype=np.float64)
    lhs = np.log(np.asarray(cmin, dtype=np.float64))
    rhs = float(expo) * np.log(n)
    mask = lhs < rhs
    close = np.flatnonzero(np.abs(lhs - rhs) <= 1e-9)
    for i in close:
        mask[i] = _below_power(int(cmin[i]), int(i) + 1, expo)
    return density_from_mask(mask)


@dataclass
class SearchReport:
    p: int
    q: int
    r: tuple[int, ...]
    scanned: int
    violations: list[int]

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "r": list(self.r), "scanned": self.scanned,
                "violations": self.violations[:20], "violation_count": len(self.violations)}


def admissible_pairs(pmax: int, qmax: int) -> list[tuple[int, int]]:
    """Coprime (p, q) with 2 <= p <= q, p <= pmax, q <= qmax and q^(p-1) < p^p."""
    return [
        (p, q)
        for p in range(2, pmax + 1)
        for q in range(p, qmax + 1)
        if math.gcd(p, q) == 1 and q ** (p - 1) < p**p
    ]


def random_r(p: int, q: int, rng: np.random.Generator, kmax: int | None = None) -> tuple[int, ...]:
    """r(j) = p*k_j - q*j with k_j >= 1, so q*j + r(j) = p*k_j: condition (c) and C(N) >= 1."""
    kmax = kmax or q
    return tuple(int(p * rng.integers(1, kmax + 1) - q * j) for j in range(1, p))


def random_map_search(
    pmax: int,
    qmax: int,
    trials_per_pair: int,
    budget: OrbitBudget,
    seed: int,
    n_scan: int = 10_000,
    threads: int | None = None,
) -> list[SearchReport]:
    """Look for orbits of maps satisfying (a), (b), (c) that exceed the size budget.

    A violation is a start N <= n_scan whose orbit reaches 10**max_digits within
    max_steps steps.
    """
    if pmax < 2 or qmax < 2:
        raise ValueError("pmax and qmax must be >= 2")
    if budget.value_limit is None:
        raise ValueError("search needs a magnitude budget (max_digits)")
    rng = np.random.default_rng(seed)
    out = []
    for p, q in admissible_pairs(pmax, qmax):
        for _ in range(trials_per_pair):
            r = random_r(p, q, rng)
            rows = kernels.scan_range(p, q, r, 1, n_scan, budget.max_steps,
                                      budget.value_limit, threads=threads)
            bad = (np.flatnonzero(rows["status"] == LIMIT) + 1).tolist()
            out.append(SearchReport(p, q, r, n_scan, bad))
    return out


def exceed_fraction(
    spec: MapSpec, x: int, threshold: int, max_steps: int, threads: int | None = None
) -> Fraction:
    """Share of N <= x with C^k(N) > threshold for some k <= max_steps."""
    rows = kernels.scan_range(spec.p, spec.q, spec.r, 1, x, max_steps, threshold + 1,
                              threads=threads)
    return Fraction(int(np.count_nonzero(rows["status"] == LIMIT)), x)


def p_greater_q_bound(spec: MapSpec) -> int:
    """C_min(N) <= p * max|r(j)| for every N when p > q."""
    if spec.p <= spec.q:
        raise ValueError("bound only applies when p > q")
    return spec.p * spec.rmax


def c_min_trace(spec: MapSpec, n: int, steps: int) -> int:
    m = n
    for _ in range(steps):
        n = c_step(spec, n)
        m = min(m, n)
    return m
