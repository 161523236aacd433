"""Discrete laws behind the valuation statistics.

Geometric and Pascal laws, the exact law of valuation vectors over a residue
period, the Syracuse random variable mod q^n (exact by dynamic programming or
sampled), its Fourier coefficients and its oscillation between scales.
"""

from __future__ import annotations

import cmath
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable

import numpy as np

from collatzlab.core import MapSpec, nu_p, validate_conditions

TAIL = "tail"
EXACT_CAP = 10_000
FLOAT_CAP = 2_000_000
ENUM_CAP = 10_000_000


@dataclass
class Pmf:
    """Finite law with an explicit bucket for truncated mass.

    Weights are Fractions (exact) or floats.  When the outcomes are residues
    mod base**exponent, `base` and `exponent` record the modulus.
    """

    weights: dict[Hashable, Fraction | float]
    tail: Fraction | float = 0
    base: int | None = None
    exponent: int | None = None

    def __post_init__(self):
        if any(w < 0 for w in self.weights.values()) or self.tail < 0:
            raise ValueError("weights must be nonnegative")

    @property
    def modulus(self) -> int | None:
        return None if self.base is None else self.base**self.exponent

    @property
    def exact(self) -> bool:
        return all(isinstance(w, (Fraction, int)) for w in self.weights.values())

    def total(self):
        if self.exact:
            return sum(self.weights.values(), Fraction(0)) + self.tail
        return math.fsum(list(self.weights.values()) + [float(self.tail)])

    def check_normalized(self, tol: float = 1e-12) -> bool:
        t = self.total()
        return t == 1 if self.exact and isinstance(self.tail, (Fraction, int)) else abs(t - 1) <= tol

    def __getitem__(self, x):
        return self.weights.get(x, 0)

    def reduce_mod(self, exponent: int) -> Pmf:
        """Law of X mod base**exponent."""
        if self.base is None or exponent > self.exponent:
            raise ValueError("can only reduce a residue law to a coarser modulus")
        m = self.base**exponent
        out = defaultdict(int)
        for x, w in self.weights.items():
            out[x % m] += w
        return Pmf(dict(sorted(out.items())), self.tail, self.base, exponent)

    def as_array(self) -> np.ndarray:
        """Float weights indexed by residue 0..modulus-1."""
        arr = np.zeros(self.modulus)
        for x, w in self.weights.items():
            arr[x] = float(w)
        return arr

    def csv_rows(self):
        if self.exact:
            yield ("outcome", "weight_numerator", "weight_denominator")
            for x, w in sorted(self.weights.items(), key=lambda kv: str(kv[0])):
                w = Fraction(w)
                yield (_outcome_str(x), w.numerator, w.denominator)
            if self.tail:
                t = Fraction(self.tail)
                yield (TAIL, t.numerator, t.denominator)
        else:
            yield ("outcome", "weight")
            for x, w in sorted(self.weights.items(), key=lambda kv: str(kv[0])):
                yield (_outcome_str(x), repr(float(w)))
            if self.tail:
                yield (TAIL, repr(float(self.tail)))

    def to_dict(self) -> dict:
        def enc(w):
            return str(w) if isinstance(w, Fraction) else w

        return {
            "modulus": self.modulus,
            "exact": self.exact,
            "weights": {_outcome_str(x): enc(w) for x, w in self.weights.items()},
            "tail": enc(self.tail),
        }


def _outcome_str(x) -> str:
    if isinstance(x, tuple):
        return " ".join(map(str, x))
    return str(x)


class RngStream:
    """Counter-based generator; (seed, stream) fixes the draw sequence."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self.gen = np.random.Generator(np.random.Philox(ss))

    def spawn(self, stream: int) -> RngStream:
        return RngStream(self.seed, stream)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"


def _as_number(v):
    if isinstance(v, float):
        return v
    return Fraction(v)


def geometric_pmf(mu, n: int):
    """P[G(mu) = n] = (1/mu)((mu-1)/mu)^(n-1) on n >= 1, mean mu."""
    mu = _as_number(mu)
    if mu <= 1:
        raise ValueError("mean must exceed 1")
    if n < 1:
        return mu * 0
    return (1 / mu) * ((mu - 1) / mu) ** (n - 1)


def pascal_pmf(nu, n: int):
    """Law of G(nu) + G(nu): ((n-1)/nu^2)((nu-1)/nu)^(n-2) on n >= 2."""
    nu = _as_number(nu)
    if nu <= 1:
        raise ValueError("mean must exceed 1")
    if n < 2:
        raise ValueError("Pascal support starts at 2")
    return (n - 1) / nu**2 * ((nu - 1) / nu) ** (n - 2)


def geometric_law(mu, cutoff: int) -> Pmf:
    """G(mu) on 1..cutoff with the remaining mass in the tail bucket."""
    mu = _as_number(mu)
    w = {k: geometric_pmf(mu, k) for k in range(1, cutoff + 1)}
    tail = ((mu - 1) / mu) ** cutoff
    return Pmf(w, tail)


def tv_distance(f: Pmf, g: Pmf):
    """Half the l1 distance, with the tail buckets compared as one more outcome."""
    keys = set(f.weights) | set(g.weights)
    diffs = [abs(f[x] - g[x]) for x in keys]
    diffs.append(abs(f.tail - g.tail))
    if f.exact and g.exact:
        return sum(diffs, Fraction(0)) / 2
    return math.fsum(float(d) for d in diffs) / 2


def _admissible(x: int, y: int, p: int) -> np.ndarray:
    ns = np.arange(x, y, dtype=np.int64)
    return ns[ns % p != 0]


def log_uniform_sample(x: int, y: int, p: int, rng: RngStream, size: int | None = None):
    """Draw N in [x, y), p does not divide N, with P[N] proportional to 1/N.

    Ranges up to 10**6 use inversion on the cumulative weights; larger ones
    use rejection from the continuous 1/t density.
    """
    if x < 1 or x >= y:
        raise ValueError("need 1 <= x < y")
    g = rng.gen
    count = 1 if size is None else size
    if y - x <= 1_000_000:
        ns = _admissible(x, y, p)
        if ns.size == 0:
            raise ValueError(f"no integer in [{x}, {y}) is prime to {p}")
        cum = np.cumsum(1.0 / ns)
        idx = np.searchsorted(cum, g.random(count) * cum[-1], side="right")
        out = ns[np.minimum(idx, ns.size - 1)]
        return int(out[0]) if size is None else out
    out = []
    lx, ly = math.log(x), math.log(y)
    bound = 1 / (x * math.log1p(1 / x))
    while len(out) < count:
        t = math.exp(lx + (ly - lx) * g.random())
        n = int(t)
        if n < x or n >= y or n % p == 0:
            continue
        accept = 1 / (n * math.log1p(1 / n)) / bound
        if g.random() < accept:
            out.append(n)
    return out[0] if size is None else np.array(out, dtype=object)


def _valuations(spec: MapSpec, n: int, k: int, cap: int | None):
    """(a^(k)(n), residue classes j_1..j_{k+1}); a is None once |a| exceeds cap."""
    p, q = spec.p, spec.q
    a, js, s = [], [], 0
    for _ in range(k):
        j = n % p
        js.append(j)
        num = q * n + spec.r[j - 1]
        v = nu_p(num, p)
        a.append(v)
        s += v
        if cap is not None and s > cap:
            return None, None
        n = num // p**v
    js.append(n % p)
    return tuple(a), tuple(js)


def _period(spec: MapSpec, m: int) -> int:
    size = spec.p ** (m + 1)
    if size > ENUM_CAP:
        raise ValueError(f"p^(m+1) = {size} exceeds the enumeration cap {ENUM_CAP}")
    return size


def _require_ac(spec: MapSpec):
    rep = validate_conditions(spec)
    if not (rep.cond_a and rep.cond_c):
        raise ValueError("needs conditions (a) and (c)")


def exact_a_distribution(spec: MapSpec, n: int, m: int) -> Pmf:
    """Law of a^(n)(X), X uniform on the N <= p^(m+1) prime to p.

    Vectors with |a| > m are not determined by N mod p^(m+1) and go to the tail.
    """
    _require_ac(spec)
    size = _period(spec, m)
    counts: dict[tuple, int] = defaultdict(int)
    over = 0
    for N in range(1, size + 1):
        if N % spec.p == 0:
            continue
        a, _ = _valuations(spec, N, n, m)
        if a is None:
            over += 1
        else:
            counts[a] += 1
    total = size - size // spec.p
    return Pmf({a: Fraction(c, total) for a, c in sorted(counts.items())}, Fraction(over, total))


def geometric_product_law(p: int, n: int, m: int) -> Pmf:
    """n i.i.d. G(p/(p-1)) truncated at |a| <= m, the remainder in the tail."""
    w = {}
    for s in range(n, m + 1):
        mass = Fraction((p - 1) ** n, p**s)
        for cut in _compositions(s, n):
            w[cut] = mass
    tail = 1 - sum(w.values(), Fraction(0))
    return Pmf(w, tail)


def _compositions(s: int, n: int):
    if n == 0:
        if s == 0:
            yield ()
        return
    for first in range(1, s - n + 2):
        for rest in _compositions(s - first, n - 1):
            yield (first,) + rest


def tv_a_vs_geometric(spec: MapSpec, n: int, m: int):
    if n == 0:
        return Fraction(0)
    return tv_distance(exact_a_distribution(spec, n, m), geometric_product_law(spec.p, n, m))


def tv_a_log_uniform(spec: MapSpec, n: int, x: int, y: int, m: int) -> float:
    """TV between a^(n)(X) for log-uniform X on [x, y) and G(mu)^n, both cut at |a| <= m."""
    _require_ac(spec)
    ns = _admissible(x, y, spec.p).tolist()
    w = defaultdict(float)
    over = 0.0
    for N in ns:
        a, _ = _valuations(spec, N, n, m)
        if a is None:
            over += 1.0 / N
        else:
            w[a] += 1.0 / N
    z = math.fsum(w.values()) + over
    emp = Pmf({a: v / z for a, v in w.items()}, over / z)
    geo = geometric_product_law(spec.p, n, m)
    geo = Pmf({a: float(v) for a, v in geo.weights.items()}, float(geo.tail))
    return tv_distance(emp, geo)


@dataclass
class ResidueCheck:
    k: int
    m_cap: int
    fibers: int
    checked: int
    passed: bool
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"k": self.k, "m_cap": self.m_cap, "fibers": self.fibers,
                "checked": self.checked, "passed": self.passed, "failures": self.failures[:10]}


def residue_class_check(spec: MapSpec, k: int, m_cap: int) -> ResidueCheck:
    """Exhaustive check over one period of p^(m_cap+1).

    Starts are grouped by (a^(k), j_1..j_{k+1}) where j_i = S^(i-1)(N) mod p,
    which determines R^(k+1).  Each group with |a| = s <= m_cap must be one
    full residue class mod p^(s+1): the same residue for all members, and
    every window element of that class present.
    """
    _require_ac(spec)
    p = spec.p
    size = _period(spec, m_cap)
    groups: dict[tuple, list[int]] = defaultdict(list)
    checked = 0
    for N in range(1, size + 1):
        if N % p == 0:
            continue
        a, js = _valuations(spec, N, k, m_cap)
        if a is None:
            continue
        groups[(a, js)].append(N)
        checked += 1
    failures = []
    for (a, js), members in groups.items():
        mod = p ** (sum(a) + 1)
        residues = {N % mod for N in members}
        if len(residues) != 1 or len(members) != size // mod:
            failures.append({"a": list(a), "j": list(js), "residues": sorted(residues)[:5],
                             "members": len(members), "expected": size // mod})
    return ResidueCheck(k, m_cap, len(groups), checked, not failures, failures)


def multiplicative_order(a: int, m: int) -> int:
    if m == 1:
        return 1
    if math.gcd(a, m) != 1:
        raise ValueError(f"{a} is not a unit mod {m}")
    # the order divides phi(m); for the moduli used here a direct walk is fine
    k, x = 1, a % m
    while x != 1:
        x = x * a % m
        k += 1
    return k


def _inverse_power_law_exact(p: int, M: int):
    """Law of p^(-G) mod M for G ~ G(p/(p-1)) as (unit, numerator), denominator.

    k = G mod d (d the order of p) has mass (p-1) p^(d-k0) / (p^d - 1) for k0 = 1..d.
    """
    d = multiplicative_order(p, M)
    inv = pow(p, -1, M) if M > 1 else 0
    den = p**d - 1
    out = defaultdict(int)
    u = 1
    for k0 in range(1, d + 1):
        u = u * inv % M
        out[u] += (p - 1) * p ** (d - k0)
    return list(out.items()), den


def _inverse_power_law_float(p: int, M: int):
    inv = pow(p, -1, M) if M > 1 else 0
    out = defaultdict(float)
    u, w = 1, 1.0
    for _ in range(1, 200):
        u = u * inv % M
        w /= p
        mass = (p - 1) * w
        if mass < 1e-300:
            break
        out[u] += mass
    return list(out.items())


def syracuse_rv_exact(spec: MapSpec, n: int, exact: bool | None = None) -> Pmf:
    """Law of S_n = sum_{i<=n} q^(i-1) p^(-G_(1,i)) U_i mod q^n.

    Uses S_n = p^(-G_1) (U_1 + q S'_(n-1)) mod q^n with S' an independent copy.
    Exact mode carries integer numerators over a common denominator; float mode
    sums the geometric law directly and is used above EXACT_CAP residues.
    """
    if not validate_conditions(spec).cond_a:
        raise ValueError("needs gcd(p, q) = 1")
    p, q = spec.p, spec.q
    if n == 0:
        return Pmf({0: Fraction(1)}, 0, q, 0)
    if q**n > FLOAT_CAP:
        raise ValueError(f"q^n = {q**n} exceeds the cap {FLOAT_CAP}")
    if exact is None:
        exact = q**n <= EXACT_CAP
    if exact and q**n > EXACT_CAP:
        raise ValueError(f"q^n = {q**n} exceeds the exact-mode cap {EXACT_CAP}")
    rs = list(spec.r)
    if exact:
        law, den = {0: 1}, 1
        for level in range(1, n + 1):
            M = q**level
            y = defaultdict(int)
            for s, w in law.items():
                for r in rs:
                    y[(r + q * s) % M] += w
            units, dg = _inverse_power_law_exact(p, M)
            new = defaultdict(int)
            for x, w in y.items():
                for u, wu in units:
                    new[x * u % M] += w * wu
            law, den = dict(new), den * len(rs) * dg
        return Pmf({x: Fraction(w, den) for x, w in sorted(law.items()) if w}, 0, q, n)
    arr = np.ones(1)
    for level in range(1, n + 1):
        M = q**level
        prev = arr
        y = np.zeros(M)
        base = (q * np.arange(prev.size)) % M
        for r in rs:
            np.add.at(y, (base + r) % M, prev / len(rs))
        new = np.zeros(M)
        idx = np.arange(M)
        for u, wu in _inverse_power_law_float(p, M):
            np.add.at(new, idx * u % M, y * wu)
        arr = new / new.sum()
    return Pmf({int(x): float(arr[x]) for x in np.flatnonzero(arr)}, 0.0, q, n)


def syracuse_rv_sample(spec: MapSpec, n: int, rng: RngStream, size: int | None = None):
    """Draws of S_n from independent G(mu) valuations and uniform r(j) digits."""
    if not validate_conditions(spec).cond_a:
        raise ValueError("needs gcd(p, q) = 1")
    p, q = spec.p, spec.q
    count = 1 if size is None else size
    M = q**n
    if n == 0:
        out = np.zeros(count, dtype=np.int64)
        return 0 if size is None else out
    if M >= 2**31:
        raise ValueError("q^n too large for vectorized sampling")
    d = multiplicative_order(p, M)
    inv = pow(p, -1, M)
    table = np.empty(d, dtype=np.int64)
    u = 1
    for t in range(d):
        table[t] = u
        u = u * inv % M
    g = rng.gen
    G = g.geometric((p - 1) / p, size=(n, count))
    J = g.integers(0, p - 1, size=(n, count))
    R = np.asarray(spec.r, dtype=np.int64)[J] % M
    acc = np.zeros(count, dtype=np.int64)
    gsum = np.zeros(count, dtype=np.int64)
    qpow = 1
    for i in range(n):
        gsum = (gsum + G[i]) % d
        term = table[gsum] * R[i] % M
        acc = (acc + qpow * term) % M
        qpow = qpow * q % M
    return int(acc[0]) if size is None else acc


def empirical_pmf(draws: np.ndarray, base: int, exponent: int) -> Pmf:
    vals, counts = np.unique(draws, return_counts=True)
    total = counts.sum()
    return Pmf({int(v): c / total for v, c in zip(vals, counts)}, 0.0, base, exponent)


@dataclass(frozen=True)
class FourierEstimate:
    value: complex
    stderr: float
    method: str

    def to_dict(self) -> dict:
        return {"re": self.value.real, "im": self.value.imag, "abs": abs(self.value),
                "stderr": self.stderr, "method": self.method}


def fourier_coefficient(
    spec: MapSpec,
    n: int,
    xi: int,
    method: str = "exact",
    trials: int = 100_000,
    rng: RngStream | None = None,
) -> FourierEstimate:
    """E[exp(-2 pi i xi S_n / q^n)]."""
    M = spec.q**n
    if method == "exact":
        law = syracuse_rv_exact(spec, n)
        terms = [float(w) * cmath.exp(-2j * math.pi * (xi * x % M) / M) for x, w in law.weights.items()]
        val = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
        return FourierEstimate(val, 0.0, "exact")
    if method != "montecarlo":
        raise ValueError(f"unknown method {method!r}")
    rng = rng or RngStream(0)
    draws = syracuse_rv_sample(spec, n, rng, size=trials)
    z = np.exp(-2j * np.pi * ((xi * draws) % M) / M)
    val = complex(z.mean())
    err = math.sqrt((z.real.var() + z.imag.var()) / trials)
    return FourierEstimate(val, err, "montecarlo")


def oscillation(f: Pmf, m: int):
    """sum_N |f(N) - q^(m-n) sum_{M = N mod q^m} f(M)| over Z/q^nZ."""
    if f.base is None:
        raise ValueError("oscillation needs a residue law")
    q, n = f.base, f.exponent
    if not 0 <= m < n:
        raise ValueError("need 0 <= m < n")
    Qm = q**m
    if f.exact:
        col = defaultdict(Fraction)
        for x, w in f.weights.items():
            col[x % Qm] += w
        scale = Fraction(1, q ** (n - m))
        return sum((abs(f[x] - col[x % Qm] * scale) for x in range(q**n)), Fraction(0))
    arr = f.as_array().reshape(q ** (n - m), Qm)
    per = arr.sum(axis=0) / q ** (n - m)
    return float(np.abs(arr - per).sum())

