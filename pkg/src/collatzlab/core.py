"""Exact arithmetic for the generalized Collatz maps C_{p,q,r} and S_{p,q,r}.

A map is fixed by integers p, q >= 2 and a residue table r(1..p-1):

    C(N) = N / p            if p | N
    C(N) = q N + r(N mod p) otherwise

and its Syracuse acceleration S(N) = (q N + r(j)) / p^m strips every factor
of p at once.  Everything here works on Python ints, so orbits are exact at
any size.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence


@dataclass(frozen=True)
class MapSpec:
    """The triple (p, q, r) with r[0] holding r(1), ..., r[p-2] holding r(p-1)."""

    p: int
    q: int
    r: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(int(v) for v in self.r))
        if self.p < 2 or self.q < 2:
            raise ValueError(f"p and q must be >= 2, got p={self.p}, q={self.q}")
        if len(self.r) != self.p - 1:
            raise ValueError(f"r needs p-1={self.p - 1} entries, got {len(self.r)}")
        for j in range(1, self.p):
            if self.q * j + self.r[j - 1] < 1:
                raise ValueError(
                    f"q*j + r(j) must be >= 1 so that C maps N into N; fails at j={j}"
                )

    def rj(self, j: int) -> int:
        """r(j) for a nonzero residue j."""
        return self.r[j - 1]

    @property
    def rmax(self) -> int:
        return max(abs(v) for v in self.r)

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "r": list(self.r)}

    @classmethod
    def from_dict(cls, d: dict) -> MapSpec:
        return cls(int(d["p"]), int(d["q"]), tuple(d["r"]))

    @classmethod
    def from_json(cls, text: str) -> MapSpec:
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __str__(self):
        return f"C[p={self.p}, q={self.q}, r={list(self.r)}]"


CLASSIC = MapSpec(2, 3, (1,))

# Maps that appear in the numerical experiments, addressable by name from the CLI.
PRESETS: dict[str, MapSpec] = {
    "classic": CLASSIC,
    "3x-1": MapSpec(2, 3, (-1,)),
    "m4-6-a": MapSpec(4, 6, (26, 20, 18)),
    "m4-6-div": MapSpec(4, 6, (-2, -8, -14)),
    "m4-6-noc": MapSpec(4, 6, (2, 4, 11)),
    "m3-6": MapSpec(3, 6, (3, 6)),
    "m12-15": MapSpec(12, 15, (69, 42, 27, -24, 69, 54, -9, 36, -15, -6, -21)),
    "m12-15-div": MapSpec(12, 15, (9, 6, 3, 0, 9, 6, 3, 0, 9, 6, 3)),
    "m3-2": MapSpec(3, 2, (4, 2)),
}


@dataclass(frozen=True)
class ConditionReport:
    cond_a: bool
    cond_b: bool
    cond_c: bool
    h: int
    mu: Fraction
    gamma: float

    def to_dict(self) -> dict:
        return {
            "cond_a": self.cond_a,
            "cond_b": self.cond_b,
            "cond_c": self.cond_c,
            "h": self.h,
            "mu": str(self.mu),
            "gamma": self.gamma,
        }


def validate_conditions(spec: MapSpec) -> ConditionReport:
    p, q = spec.p, spec.q
    return ConditionReport(
        cond_a=math.gcd(p, q) == 1,
        # integer comparison, exact at the boundary
        cond_b=q ** (p - 1) < p**p,
        cond_c=all((q * j + spec.rj(j)) % p == 0 for j in range(1, p)),
        h=math.gcd(q, *spec.r),
        mu=Fraction(p, p - 1),
        gamma=(p - 1) / p * math.log(q) / math.log(p),
    )


def nu_p(n: int, p: int) -> int:
    """Largest m with p**m dividing n."""
    if n == 0:
        raise ValueError("valuation of 0 is undefined")
    n = abs(n)
    if p == 2:
        return (n & -n).bit_length() - 1
    m = 0
    while n % p == 0:
        n //= p
        m += 1
    return m


def c_step(spec: MapSpec, n: int) -> int:
    j = n % spec.p
    if j == 0:
        return n // spec.p
    return spec.q * n + spec.r[j - 1]


def c_power(spec: MapSpec, n: int, k: int) -> int:
    """C^k(n) without keeping the intermediate values."""
    p, q, r = spec.p, spec.q, spec.r
    for _ in range(k):
        j = n % p
        n = n // p if j == 0 else q * n + r[j - 1]
    return n


def accelerated_step(spec: MapSpec, n: int) -> int:
    """One step of N/p or (qN + r(j))/p; only integral when condition (c) holds."""
    j = n % spec.p
    if j == 0:
        return n // spec.p
    num = spec.q * n + spec.r[j - 1]
    if num % spec.p:
        raise ValueError(f"{num} not divisible by p={spec.p}; map fails condition (c)")
    return num // spec.p


def s_step(spec: MapSpec, n: int) -> tuple[int, int, int]:
    """One Syracuse step.  Returns (S(n), valuation removed, r(j) used).

    Without condition (c) the valuation may be 0; it is returned as is.
    """
    p = spec.p
    j = n % p
    if j == 0:
        raise ValueError(f"Syracuse map is defined off pN only; {n} is divisible by {p}")
    rj = spec.r[j - 1]
    num = spec.q * n + rj
    if num <= 0:
        raise ValueError(f"q*N + r(j) = {num} leaves the naturals")
    a = nu_p(num, p)
    return num // p**a, a, rj


@dataclass(frozen=True)
class OrbitBudget:
    max_steps: int | None = 10_000
    max_digits: int | None = None
    target_floor: int | None = None

    def __post_init__(self):
        for name in ("max_steps", "max_digits", "target_floor"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.max_steps is None and self.max_digits is None:
            raise ValueError("at least one of max_steps / max_digits must be finite")

    @property
    def value_limit(self) -> int | None:
        """Iterates >= this value have more than max_digits digits."""
        return None if self.max_digits is None else 10**self.max_digits

    def to_dict(self) -> dict:
        return {
            "max_steps": self.max_steps,
            "max_digits": self.max_digits,
            "target_floor": self.target_floor,
        }


class Status(enum.Enum):
    REACHED_FLOOR = "reached_floor"
    BUDGET_STEPS = "budget_steps"
    BUDGET_DIGITS = "budget_digits"
    CYCLE_CLOSED = "cycle_closed"
    HALTED = "halted"  # FRACTRAN only

    @property
    def budget_limited(self) -> bool:
        return self in (Status.BUDGET_STEPS, Status.BUDGET_DIGITS)


@dataclass
class OrbitTrace:
    start: int
    values: list[int]
    status: Status
    stop_step: int | None = None

    @property
    def min_value(self) -> int:
        return min(self.values)

    @property
    def final(self) -> int:
        return self.values[-1]

    def to_dict(self) -> dict:
        return {
            "start": str(self.start),
            "values": [str(v) for v in self.values],
            "status": self.status.value,
            "stop_step": self.stop_step,
            "min_value": str(self.min_value),
        }

    @classmethod
    def from_dict(cls, d: dict) -> OrbitTrace:
        return cls(
            start=int(d["start"]),
            values=[int(v) for v in d["values"]],
            status=Status(d["status"]),
            stop_step=d.get("stop_step"),
        )


@dataclass
class ValuationTrace:
    a: list[int] = field(default_factory=list)
    R: list[int] = field(default_factory=list)

    @property
    def partial_sums(self) -> list[int]:
        out, s = [], 0
        for v in self.a:
            s += v
            out.append(s)
        return out


def _run(step, start, budget: OrbitBudget, stop_on_cycle: bool, on_step=None) -> OrbitTrace:
    limit = budget.value_limit
    floor = budget.target_floor
    values = [start]
    if floor is not None and start <= floor:
        return OrbitTrace(start, values, Status.REACHED_FLOOR, 0)
    seen = {start} if stop_on_cycle else None
    n = start
    k = 0
    while budget.max_steps is None or k < budget.max_steps:
        out = step(n)
        if on_step is not None:
            n = on_step(out)
        else:
            n = out
        k += 1
        values.append(n)
        if floor is not None and n <= floor:
            return OrbitTrace(start, values, Status.REACHED_FLOOR, k)
        if limit is not None and n >= limit:
            return OrbitTrace(start, values, Status.BUDGET_DIGITS, k)
        if seen is not None:
            if n in seen:
                return OrbitTrace(start, values, Status.CYCLE_CLOSED, k)
            seen.add(n)
    return OrbitTrace(start, values, Status.BUDGET_STEPS, k)


def iterate_c(spec: MapSpec, n: int, budget: OrbitBudget, stop_on_cycle: bool = True) -> OrbitTrace:
    """C-orbit of n until the floor, a budget, or the first repeated value."""
    if n < 1:
        raise ValueError("start must be a positive integer")
    return _run(lambda v: c_step(spec, v), n, budget, stop_on_cycle)


def iterate_s(
    spec: MapSpec, n: int, budget: OrbitBudget, stop_on_cycle: bool = False
) -> tuple[OrbitTrace, ValuationTrace]:
    """Syracuse orbit of n together with its valuation vector a(n) and residues R(n).

    Fixed points such as S(1) = 1 do not end the run unless stop_on_cycle is set.
    """
    if n < 1 or n % spec.p == 0:
        raise ValueError(f"start must be a positive integer not divisible by p={spec.p}")
    vt = ValuationTrace()

    def record(out):
        nxt, a, rj = out
        vt.a.append(a)
        vt.R.append(rj)
        return nxt

    trace = _run(lambda v: s_step(spec, v), n, budget, stop_on_cycle, on_step=record)
    return trace, vt


def f_n(spec: MapSpec, a: Sequence[int], R: Sequence[int]) -> Fraction:
    """F_n(a, R) = sum_i q^(n-i) p^(-a_{i,n}) R_i as an exact rational."""
    if len(a) != len(R):
        raise ValueError(f"length mismatch: len(a)={len(a)}, len(R)={len(R)}")
    n = len(a)
    p, q = spec.p, spec.q
    total = Fraction(0)
    tail = 0  # a_{i,n}
    for i in range(n, 0, -1):
        tail += a[i - 1]
        total += Fraction(q ** (n - i) * R[i - 1], p**tail)
    return total


def check_iteration_identity(spec: MapSpec, n: int, steps: int) -> bool:
    """S^k(N) == q^k p^(-a_{1,k}) N + F_k(a, R), checked in exact rationals."""
    trace, vt = iterate_s(spec, n, OrbitBudget(max_steps=steps))
    lhs = trace.values[steps]
    rhs = Fraction(spec.q**steps * n, spec.p ** sum(vt.a)) + f_n(spec, vt.a, vt.R)
    return rhs == lhs


def reduce_gcd(spec: MapSpec) -> tuple[MapSpec, int]:
    """Conjugate away h = gcd(q, r(1), ..., r(p-1)): C(hN) = h C*(N)."""
    if math.gcd(spec.p, spec.q) != 1:
        raise ValueError("reduction needs gcd(p, q) = 1 so that h is invertible mod p")
    p = spec.p
    h = math.gcd(spec.q, *spec.r)
    if h == 1:
        return spec, 1
    hinv = pow(h, -1, p)
    r_star = [0] * (p - 1)
    for j in range(1, p):
        r_star[(j * hinv) % p - 1] = spec.rj(j) // h
    return MapSpec(p, spec.q, tuple(r_star)), h


def mw_frequencies(spec: MapSpec, n: int, k: int) -> list[Fraction]:
    """Share of each residue mod p among C^0(n), ..., C^(k-1)(n)."""
    if k < 1:
        raise ValueError("k must be positive")
    counts = [0] * spec.p
    for _ in range(k):
        counts[n % spec.p] += 1
        n = c_step(spec, n)
    return [Fraction(c, k) for c in counts]
