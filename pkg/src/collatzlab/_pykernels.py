"""Pure-Python orbit scanning.  Reference semantics for the compiled kernel.

Every start value is summarised by Brent's cycle finder.  The hare of Brent's
first phase visits x_0, x_1, ... in order and stops only after it has seen the
whole tail and one full turn of the cycle, so the running minimum and the
anchor test taken along the hare cover every value of the orbit.
"""

import numpy as np

CYCLE, STEPS, LIMIT, ESCALATE = 0, 1, 2, 3

FIELDS = ("status", "steps", "cmin", "cycle_min", "cycle_len", "entry", "tail", "hit")


def make_step(p, q, r, accelerated):
    rr = (0,) + tuple(r)
    if accelerated:
        def step(n):
            j = n % p
            return n // p if j == 0 else (q * n + rr[j]) // p
    else:
        def step(n):
            j = n % p
            return n // p if j == 0 else q * n + rr[j]
    return step


def orbit_summary(step, x0, max_steps, limit, anchor):
    """Tuple in FIELDS order for one start value.

    steps is the index of the first visit to the cycle minimum when the cycle
    closes, else the number of steps taken.  limit=None disables the size test.
    """
    hit = x0 == anchor
    if limit is not None and x0 >= limit:
        return (LIMIT, 0, x0, -1, 0, -1, -1, hit)
    cmin = x0
    tort = x0
    hare = step(x0)
    k = 1
    power = lam = 1
    while True:
        if limit is not None and hare >= limit:
            return (LIMIT, k, cmin, -1, 0, -1, -1, hit)
        if hare < cmin:
            cmin = hare
        if hare == anchor:
            hit = True
        if tort == hare:
            break
        if max_steps is not None and k >= max_steps:
            return (STEPS, k, cmin, -1, 0, -1, -1, hit)
        if power == lam:
            tort = hare
            power *= 2
            lam = 0
        hare = step(hare)
        k += 1
        lam += 1
    tort = hare = x0
    for _ in range(lam):
        hare = step(hare)
    mu = 0
    while tort != hare:
        tort = step(tort)
        hare = step(hare)
        mu += 1
    entry = tort
    cyc_min, off, v = tort, 0, tort
    for i in range(1, lam):
        v = step(v)
        if v < cyc_min:
            cyc_min, off = v, i
    return (CYCLE, mu + off, cmin, cyc_min, lam, entry, mu, hit)


def scan(p, q, r, lo, hi, max_steps, limit, anchor=0, accelerated=False):
    """Summaries for every start in [lo, hi]; dict of numpy arrays keyed by FIELDS."""
    step = make_step(p, q, r, accelerated)
    rows = [orbit_summary(step, n, max_steps, limit, anchor) for n in range(lo, hi + 1)]
    return pack(rows, hi - lo + 1)


def pack(rows, size):
    cols = list(zip(*rows)) if rows else [()] * len(FIELDS)
    out = {}
    for name, col in zip(FIELDS, cols):
        if name in ("status", "hit"):
            out[name] = np.array(col, dtype=np.int8).reshape(size)
            continue
        try:
            out[name] = np.array(col, dtype=np.int64).reshape(size)
        except OverflowError:
            out[name] = np.array(col, dtype=object).reshape(size)
    return out
