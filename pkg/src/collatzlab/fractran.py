"""FRACTRAN interpreter and its correspondence with periodic multiplicative maps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Iterator

from collatzlab.core import OrbitBudget, OrbitTrace, Status


@dataclass(frozen=True)
class FractranProgram:
    fractions: tuple[Fraction, ...]

    def __post_init__(self):
        fr = tuple(Fraction(f) for f in self.fractions)
        if not fr:
            raise ValueError("a program needs at least one fraction")
        if any(f <= 0 for f in fr):
            raise ValueError("fractions must be positive")
        object.__setattr__(self, "fractions", fr)

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple((f.numerator, f.denominator) for f in self.fractions)

    def __len__(self):
        return len(self.fractions)

    def to_text(self) -> str:
        return "".join(f"{a}/{b}\n" for a, b in self.pairs)


def parse_program(text: str) -> FractranProgram:
    """One "A/B" (or integer) per line; blank lines and '#' comments ignored."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(Fraction(line))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"line {lineno}: cannot parse fraction {line!r}") from exc
    return FractranProgram(tuple(out))


def load_program(path: str) -> FractranProgram:
    with open(path) as fh:
        return parse_program(fh.read())


def prime_game() -> FractranProgram:
    """Conway's 14-fraction game whose powers of 2 enumerate the primes."""
    text = resources.files("collatzlab").joinpath("data/prime.frc").read_text()
    return parse_program(text)


def fractran_step(F: FractranProgram, n: int) -> int | None:
    """f_m * n for the first f_m making it an integer; None when the game halts."""
    for a, b in F.pairs:
        if n % b == 0:
            return n // b * a
    return None


def fractran_iter(F: FractranProgram, n: int) -> Iterator[int]:
    """The orbit n, T(n), T(T(n)), ... until halting."""
    pairs = F.pairs
    while True:
        yield n
        for a, b in pairs:
            if n % b == 0:
                n = n // b * a
                break
        else:
            return


def fractran_run(F: FractranProgram, n: int, budget: OrbitBudget) -> OrbitTrace:
    if n < 1:
        raise ValueError("start must be a positive integer")
    limit = budget.value_limit
    values = [n]
    k = 0
    while budget.max_steps is None or k < budget.max_steps:
        nxt = fractran_step(F, n)
        if nxt is None:
            return OrbitTrace(values[0], values, Status.HALTED, k)
        n = nxt
        k += 1
        values.append(n)
        if limit is not None and n >= limit:
            return OrbitTrace(values[0], values, Status.BUDGET_DIGITS, k)
    return OrbitTrace(values[0], values, Status.BUDGET_STEPS, k)


def power_exponent(v: int, base: int) -> int | None:
    """k with v == base**k, else None."""
    if v < 1:
        return None
    if base == 2:
        return v.bit_length() - 1 if v & (v - 1) == 0 else None
    k = 0
    while v % base == 0:
        v //= base
        k += 1
    return k if v == 1 else None


def extract_power_exponents(trace, base: int) -> list[int]:
    """Exponents of the iterates that are exact powers of base, in orbit order."""
    if base < 2:
        raise ValueError("base must be >= 2")
    values = trace.values if isinstance(trace, OrbitTrace) else trace
    out = []
    for v in values:
        k = power_exponent(v, base)
        if k is not None:
            out.append(k)
    return out


def stream_power_exponents(F: FractranProgram, n: int, base: int, count: int, max_steps: int):
    """First `count` power exponents of the orbit without storing it.

    Returns (exponents, steps_used, status).
    """
    out = []
    k = -1
    for k, v in enumerate(fractran_iter(F, n)):
        e = power_exponent(v, base)
        if e is not None:
            out.append(e)
            if len(out) >= count:
                return out, k, None
        if k >= max_steps:
            return out, k, Status.BUDGET_STEPS
    return out, k, Status.HALTED


@dataclass(frozen=True)
class PeriodicMapTable:
    """N -> N*A/B with (A, B) chosen by N mod modulus (residues listed as 1..modulus)."""

    modulus: int
    classes: dict[int, tuple[int, int]]
    partition: tuple[frozenset[int], ...]
    last_is_integer: bool

    def rule(self, n: int) -> tuple[int, int]:
        res = n % self.modulus or self.modulus
        return self.classes[res]

    def step(self, n: int) -> int:
        a, b = self.rule(n)
        return n // b * a

    def to_dict(self) -> dict:
        return {
            "modulus": self.modulus,
            "classes": {str(k): list(v) for k, v in sorted(self.classes.items())},
            "partition": [sorted(u) for u in self.partition],
            "last_is_integer": self.last_is_integer,
        }


def fractran_to_collatz(F: FractranProgram) -> PeriodicMapTable:
    """The periodic map that agrees with F everywhere.

    U_m holds the residues divisible by B_m and by no earlier denominator.
    Raises when some residue class is divisible by no denominator, since F
    halts there.
    """
    pairs = F.pairs
    p = math.lcm(*(b for _, b in pairs))
    covered: set[int] = set()
    parts = []
    for _, b in pairs:
        u = frozenset(range(b, p + 1, b)) - covered
        covered |= u
        parts.append(u)
    missing = sorted(set(range(1, p + 1)) - covered)
    if missing:
        raise ValueError(f"game is not total: residue {missing[0] % p} mod {p} is uncovered")
    classes = {}
    for (a, b), u in zip(pairs, parts):
        for res in u:
            classes[res] = (a, b)
    return PeriodicMapTable(p, classes, tuple(parts), pairs[-1][1] == 1)


def collatz_to_fractran(table: PeriodicMapTable) -> FractranProgram:
    """A fraction list reproducing a periodic multiplicative table.

    The rule must depend on N only through gcd(N, modulus).  Fractions are
    placed greedily: a fraction A/B (lowest terms) may go next when every
    still-unassigned gcd class divisible by B uses that same fraction.
    """
    p = table.modulus
    by_class: dict[int, Fraction] = {}
    for res in range(1, p + 1):
        a, b = table.classes[res]
        if res % b:
            raise ValueError(f"residue {res}: denominator {b} does not divide it")
        g = math.gcd(res, p)
        f = Fraction(a, b)
        if by_class.setdefault(g, f) != f:
            raise ValueError(f"rule is not a function of gcd(N, {p}) at residue {res}")
    remaining = dict(by_class)
    out = []
    while remaining:
        for f in sorted(set(remaining.values()), key=lambda f: (-f.denominator, f)):
            hit = [g for g in remaining if g % f.denominator == 0]
            if all(remaining[g] == f for g in hit):
                out.append(f)
                for g in hit:
                    del remaining[g]
                break
        else:
            raise ValueError("no fraction ordering reproduces this table")
    return FractranProgram(tuple(out))


def random_total_game(rng, size: int = 4, max_entry: int = 12) -> FractranProgram:
    """A random game guaranteed total (rejection on the residue-coverage test)."""
    while True:
        fr = [
            Fraction(int(rng.integers(1, max_entry + 1)), int(rng.integers(1, max_entry + 1)))
            for _ in range(size)
        ]
        F = FractranProgram(tuple(fr))
        try:
            fractran_to_collatz(F)
        except ValueError:
            continue
        return F
