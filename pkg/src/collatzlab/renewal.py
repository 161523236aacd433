"""Phase function theta(j, l), its bad set, triangle decomposition and the 2D renewal walk."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Callable

import numpy as np

from collatzlab.core import MapSpec, validate_conditions
from collatzlab.stochastic import RngStream, pascal_pmf

TOL = 1e-9
H_CAP = 1_000_000


def select_j0(spec: MapSpec, xi: int) -> int:
    """Smallest j with q not dividing xi * r(j)."""
    for j in range(1, spec.p):
        if (xi * spec.rj(j)) % spec.q:
            return j
    raise ValueError(f"q={spec.q} divides xi*r(j) for every j")


def _theta_numerator(spec: MapSpec, xi: int, n: int, j: int, l: int, j0: int) -> int:
    """Centered numerator X with theta = X / q^n and -q^n/2 < X <= q^n/2."""
    if j < 1 or l < 1:
        raise ValueError("need j, l >= 1")
    Q = spec.q**n
    x = xi * spec.rj(j0) * (spec.p - 1) * pow(spec.q, 2 * j - 2, Q) * pow(spec.p, 1 - l, Q) % Q
    return x - Q if 2 * x > Q else x


def theta_exact(spec: MapSpec, xi: int, n: int, j: int, l: int, j0: int | None = None) -> Fraction:
    j0 = select_j0(spec, xi) if j0 is None else j0
    return Fraction(_theta_numerator(spec, xi, n, j, l, j0), spec.q**n)


def theta(spec: MapSpec, xi: int, n: int, j: int, l: int, j0: int | None = None) -> float:
    """theta(j, l) in (-1/2, 1/2], exact modular arithmetic then one rounding."""
    return float(theta_exact(spec, xi, n, j, l, j0))


def centered(x: Fraction) -> Fraction:
    """{x}_1: the representative of x mod 1 in (-1/2, 1/2]."""
    y = x - math.floor(x)
    return y - 1 if y > Fraction(1, 2) else y


def eta_of(spec: MapSpec) -> float:
    return 2 * math.log(spec.q) / math.log(spec.p)


@dataclass(frozen=True)
class Triangle:
    j0: int
    l0: int
    s0: float
    eta: float

    def contains(self, j: int, l: int, tol: float = TOL) -> bool:
        return j >= self.j0 and l <= self.l0 and self.eta * (j - self.j0) + (self.l0 - l) <= self.s0 + tol

    def cells(self, J: int, L: int, tol: float = TOL) -> set[tuple[int, int]]:
        """Lattice points of the triangle inside [1..J] x [1..L]."""
        out = set()
        for j in range(self.j0, J + 1):
            budget = self.s0 - self.eta * (j - self.j0)
            if budget < -tol:
                break
            lo = self.l0 - math.floor(budget + tol) if math.isfinite(budget) else 1
            for l in range(max(1, lo), min(self.l0, L) + 1):
                out.add((j, l))
        return out

    def to_dict(self) -> dict:
        return {"j0": self.j0, "l0": self.l0, "s0": self.s0 if math.isfinite(self.s0) else "inf"}


@dataclass
class BadSet:
    window: tuple[int, int]
    members: frozenset
    epsilon: float
    spec: MapSpec | None = None
    xi: int | None = None
    n: int | None = None
    j0: int | None = None
    thetas: dict = field(default_factory=dict, repr=False)

    def grid(self) -> np.ndarray:
        """Boolean membership, indexed [j, l] with row/column 0 unused."""
        J, L = self.window
        g = np.zeros((J + 1, L + 1), dtype=bool)
        for j, l in self.members:
            g[j, l] = True
        return g

    def __contains__(self, cell):
        return cell in self.members

    def __len__(self):
        return len(self.members)

    def to_dict(self) -> dict:
        return {"window": list(self.window), "epsilon": self.epsilon, "xi": self.xi,
                "n": self.n, "j0": self.j0, "size": len(self.members)}


def build_bad_set(spec: MapSpec, xi: int, n: int, epsilon: float, window: tuple[int, int]) -> BadSet:
    """{(j, l) in the window : |theta(j, l)| < epsilon}, decided exactly."""
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    J, L = window
    if J * L > 4_000_000:
        raise ValueError("window too large for exhaustive evaluation")
    j0 = select_j0(spec, xi)
    Q = spec.q**n
    eps = Fraction(epsilon)
    c = xi * spec.rj(j0) * (spec.p - 1) % Q
    inv = pow(spec.p, -1, Q) if Q > 1 else 0
    col = [1 % Q]
    for _ in range(L - 1):
        col.append(col[-1] * inv % Q)
    members, thetas = set(), {}
    for j in range(1, J + 1):
        row = c * pow(spec.q, 2 * j - 2, Q) % Q
        for l in range(1, L + 1):
            x = row * col[l - 1] % Q
            if 2 * x > Q:
                x -= Q
            t = Fraction(x, Q)
            if abs(t) < eps:
                members.add((j, l))
                thetas[(j, l)] = t
    return BadSet((J, L), frozenset(members), epsilon, spec, xi, n, j0, thetas)


def apex_of(cell, members) -> tuple[int, int]:
    """Walk up (l+1) while inside the set, then left (j-1)."""
    j, l = cell
    while (j, l + 1) in members:
        l += 1
    while (j - 1, l) in members:
        j -= 1
    return j, l


@dataclass
class Decomposition:
    triangles: list[Triangle]
    residual: set  # bad cells not covered
    excess: set  # covered cells outside the bad set
    min_separation: float | None
    separation_constant: float | None
    right_edge_distance: int | None

    @property
    def exact_cover(self) -> bool:
        return not self.residual and not self.excess

    def to_dict(self) -> dict:
        return {
            "triangles": [t.to_dict() for t in self.triangles],
            "exact_cover": self.exact_cover,
            "residual": sorted(self.residual)[:20],
            "excess": sorted(self.excess)[:20],
            "min_separation": self.min_separation,
            "separation_constant": self.separation_constant,
            "right_edge_distance": self.right_edge_distance,
        }


def decompose_triangles(bad: BadSet, eta: float | None = None) -> Decomposition:
    """Split the bad set into eta-sloped triangles, one per apex.

    The size of the triangle at apex (j, l) is s0 = log_p(epsilon / |theta|);
    a bad set without theta values (synthetic input) gets the largest s0 for
    which the triangle stays inside the set.
    """
    members = bad.members
    J, L = bad.window
    if eta is None:
        eta = eta_of(bad.spec)
    apexes = sorted({apex_of(c, members) for c in members})
    tris = []
    for j0, l0 in apexes:
        if bad.thetas:
            t = abs(bad.thetas[(j0, l0)])
            s0 = math.inf if t == 0 else math.log(bad.epsilon / float(t), bad.spec.p)
        else:
            s0 = _largest_inside(j0, l0, eta, members, J, L)
        tris.append(Triangle(j0, l0, s0, eta))
    covered = set()
    cell_sets = []
    for t in tris:
        cs = t.cells(J, L)
        cell_sets.append(cs)
        covered |= cs
    sep = _min_separation(cell_sets)
    const = None
    if sep is not None and bad.epsilon < 1:
        const = sep / math.log(1 / bad.epsilon)
    edge = min((J - max(j for j, _ in cs) for cs in cell_sets if cs), default=None)
    return Decomposition(tris, set(members) - covered, covered - set(members), sep, const, edge)


def _largest_inside(j0, l0, eta, members, J, L) -> float:
    s = 0.0
    while True:
        trial = Triangle(j0, l0, s + 1, eta)
        if not trial.cells(J, L) <= members or s > J + L:
            break
        s += 1
    # tighten to the exact breakpoint set by the cells
    best = s
    candidates = sorted({eta * (j - j0) + (l0 - l) for (j, l) in members
                         if j >= j0 and l <= l0 and eta * (j - j0) + (l0 - l) >= s})
    for c in candidates:
        if Triangle(j0, l0, c, eta).cells(J, L) <= members:
            best = c
        else:
            break
    return best


def _min_separation(cell_sets) -> float | None:
    """Smallest l1 distance between cells of distinct triangles."""
    arrs = [np.array(sorted(cs)) for cs in cell_sets if cs]
    if len(arrs) < 2:
        return None
    best = math.inf
    for i in range(len(arrs)):
        for k in range(i + 1, len(arrs)):
            a, b = arrs[i], arrs[k]
            d = np.abs(a[:, None, :] - b[None, :, :]).sum(axis=2).min()
            best = min(best, float(d))
    return best


def renewal_constants(p: int) -> tuple[Fraction, Fraction]:
    """(lambda, mu): J ~ G(lambda) with lambda = p^3 / (2(p-1)^2), E[H] = lambda (1, 2 mu)."""
    return Fraction(p**3, 2 * (p - 1) ** 2), Fraction(p, p - 1)


def _pascal_draw(gen, prob, size=None):
    return gen.geometric(prob, size) + gen.geometric(prob, size)


def sample_H(spec: MapSpec, rng: RngStream) -> tuple[int, int]:
    """(J, P_1 + ... + P_J) with P_i ~ G(mu) + G(mu) i.i.d. and J the first index with P_J = 3."""
    if not validate_conditions(spec).cond_a:
        raise ValueError("needs gcd(p, q) = 1")
    prob = (spec.p - 1) / spec.p
    total = 0
    for k in range(1, H_CAP + 1):
        v = int(_pascal_draw(rng.gen, prob))
        total += v
        if v == 3:
            return k, total
    raise RuntimeError(f"no P = 3 within {H_CAP} draws")


def sample_H_batch(p: int, size: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """`size` independent H draws, vectorized over the draws still running."""
    prob = (p - 1) / p
    J = np.zeros(size, dtype=np.int64)
    L = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    for _ in range(H_CAP):
        if active.size == 0:
            return J, L
        v = _pascal_draw(rng.gen, prob, active.size)
        J[active] += 1
        L[active] += v
        active = active[v != 3]
    raise RuntimeError(f"no P = 3 within {H_CAP} draws")


def h_increment(p: int) -> Callable:
    return lambda rng, size: sample_H_batch(p, size, rng)


@dataclass
class WalkStats:
    trials: int
    n_steps: int
    epsilon: float
    time_in_bad: np.ndarray
    exp_estimate: float
    exp_stderr: float
    increment_mean: tuple[float, float]
    increment_var: tuple[float, float]
    simulated_steps: int
    checkpoints: dict[int, float] = field(default_factory=dict)  # n -> mean time in bad
    checkpoint_exp: dict[int, tuple[float, float]] = field(default_factory=dict)

    @property
    def mean_time_in_bad(self) -> float:
        return float(self.time_in_bad.mean())

    @property
    def time_in_bad_stderr(self) -> float:
        return float(self.time_in_bad.std(ddof=1) / math.sqrt(self.trials)) if self.trials > 1 else 0.0

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "n_steps": self.n_steps,
            "epsilon": self.epsilon,
            "mean_time_in_bad": self.mean_time_in_bad,
            "time_in_bad_stderr": self.time_in_bad_stderr,
            "exp_estimate": self.exp_estimate,
            "exp_stderr": self.exp_stderr,
            "increment_mean": list(self.increment_mean),
            "increment_var": list(self.increment_var),
            "simulated_steps": self.simulated_steps,
            "checkpoints": {str(k): v for k, v in sorted(self.checkpoints.items())},
        }


def renewal_walk(
    increment: Callable,
    bad: BadSet,
    n: int,
    trials: int,
    epsilon: float,
    rng: RngStream,
    checkpoints=(),
) -> WalkStats:
    """Simulate X_k = H_1 + ... + H_k for k <= n in `trials` independent copies.

    The bad set lives in its window; a walk that has left the window through
    the top or the right never returns (increments are positive), so the
    simulation stops early once every copy is out and the remaining steps
    count as outside the bad set.
    """
    J, L = bad.window
    grid = bad.grid()
    pos = np.zeros((trials, 2), dtype=np.int64)
    in_bad = np.zeros(trials, dtype=np.int64)
    marks = sorted(set(checkpoints) | {n})
    snap = {}
    s1 = np.zeros(2)
    s2 = np.zeros(2)
    count = 0
    k = 0
    while k < n:
        dj, dl = increment(rng, trials)
        if (dj <= 0).any() or (dl <= 0).any():
            raise ValueError("increments must be positive in both coordinates")
        s1 += (dj.sum(), dl.sum())
        s2 += ((dj.astype(float) ** 2).sum(), (dl.astype(float) ** 2).sum())
        count += trials
        pos[:, 0] += dj
        pos[:, 1] += dl
        k += 1
        inside = (pos[:, 0] <= J) & (pos[:, 1] <= L)
        idx = np.flatnonzero(inside)
        if idx.size:
            in_bad[idx] += grid[pos[idx, 0], pos[idx, 1]]
        if k in marks:
            snap[k] = in_bad.copy()
        if not inside.any():
            break
    simulated = k
    for m in marks:
        if m not in snap:
            snap[m] = in_bad.copy()

    def exp_stats(m):
        vals = np.exp(-epsilon * (m - snap[m]).astype(float))
        err = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        return float(vals.mean()), err

    mean = s1 / count
    var = s2 / count - mean**2
    e, err = exp_stats(n)
    return WalkStats(
        trials=trials,
        n_steps=n,
        epsilon=epsilon,
        time_in_bad=snap[n],
        exp_estimate=e,
        exp_stderr=err,
        increment_mean=(float(mean[0]), float(mean[1])),
        increment_var=(float(var[0]), float(var[1])),
        simulated_steps=simulated,
        checkpoints={m: float(snap[m].mean()) for m in marks},
        checkpoint_exp={m: exp_stats(m) for m in marks},
    )


@dataclass
class RenewalBoundReport:
    A: float
    ns: list[int]
    constants: list[float]  # c_n = mean_in_bad(n) - n + A log n
    envelope: list[float]  # running max of c_n: the smallest C valid up to n
    relative_variation: float
    stable: bool
    jensen_ok: bool

    def to_dict(self) -> dict:
        return {"A": self.A, "n": self.ns, "c_n": self.constants, "envelope": self.envelope,
                "relative_variation": self.relative_variation, "stable": self.stable,
                "jensen_ok": self.jensen_ok}


def check_renewal_bound(stats: WalkStats, A: float, eps: float | None = None, tol: float = 0.2) -> RenewalBoundReport:
    """Fit C in mean_time_in_bad(n) <= n - A log n + C over the checkpoints.

    The fitted constant up to n is the running maximum of
    c_n = mean_time_in_bad(n) - n + A log n; the bound holds with a bounded C
    when that envelope stops moving, measured as (max - min) / max(|max|, 1)
    over the sweep.  Also checks Jensen's inequality
    E[exp(-eps Y)] >= exp(-eps E[Y]) for Y = #{k <= n : X_k outside} at each
    checkpoint, up to three standard errors.
    """
    ns = sorted(stats.checkpoints)
    if len(ns) < 3:
        raise ValueError("need at least 3 values of n")
    eps = stats.epsilon if eps is None else eps
    if A == 0:
        cs = [0.0] * len(ns)
    else:
        cs = [stats.checkpoints[m] - m + A * math.log(m) for m in ns]
    env = [float(c) for c in np.maximum.accumulate(cs)]
    spread = float((max(env) - min(env)) / max(abs(max(env)), 1.0))
    jensen = True
    for m in ns:
        e, err = stats.checkpoint_exp[m]
        if e < math.exp(-eps * (m - stats.checkpoints[m])) - 3 * err - 1e-300:
            jensen = False
    return RenewalBoundReport(A, ns, [float(c) for c in cs], env, spread, bool(spread < tol), jensen)


def coset_certificate(increments: list[tuple[int, int]]) -> int:
    """gcd of 2x2 minors of the differences h_i - h_0.

    The value 1 certifies that the observed increments are not contained in a
    coset of a proper subgroup of Z^2; any other value (0 included) does not.
    """
    pts = list(dict.fromkeys(increments))
    if len(pts) < 3:
        return 0
    base = pts[0]
    diffs = [(a - base[0], b - base[1]) for a, b in pts[1:]]
    dets = [diffs[i][0] * diffs[k][1] - diffs[i][1] * diffs[k][0]
            for i in range(len(diffs)) for k in range(i + 1, len(diffs))]
    return reduce(math.gcd, dets, 0)


def pascal_three_probability(p: int):
    """P[P = 3] for P ~ G(mu) + G(mu), mu = p/(p-1); equals 1/lambda."""
    return pascal_pmf(Fraction(p, p - 1), 3)
