# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Machine-word orbit scanning.

Same per-start summary as _pykernels.orbit_summary, on int64.  A start whose
orbit would overflow int64 is reported with status ESCALATE and left for the
caller to redo with Python integers.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, int8_t, INT64_MAX

cdef enum:
    CYCLE = 0
    STEPS = 1
    LIMIT = 2
    ESCALATE = 3


cdef struct Params:
    int64_t p
    int64_t q
    int64_t r[257]
    int64_t ovf
    int64_t limit
    bint has_limit
    int64_t max_steps
    bint has_max
    int64_t anchor
    bint accel


cdef inline int64_t _step(const Params* P, int64_t n) noexcept nogil:
    cdef int64_t j = n % P.p
    if j == 0:
        return n // P.p
    if P.accel:
        return (P.q * n + P.r[j]) // P.p
    return P.q * n + P.r[j]


cdef void _one(const Params* P, int64_t x0, int8_t* status, int64_t* steps,
               int64_t* cmin_o, int64_t* cycmin_o, int64_t* cyclen_o,
               int64_t* entry_o, int64_t* tail_o, int8_t* hit_o) noexcept nogil:
    cdef int64_t cmin = x0, tort = x0, hare, k = 1, power = 1, lam = 1
    cdef int64_t mu, i, v, cyc_min, off
    cdef int8_t hit = x0 == P.anchor
    cdef int8_t st = CYCLE
    cycmin_o[0] = -1; cyclen_o[0] = 0; entry_o[0] = -1; tail_o[0] = -1
    if P.has_limit and x0 >= P.limit:
        status[0] = LIMIT; steps[0] = 0; cmin_o[0] = x0; hit_o[0] = hit
        return
    if x0 > P.ovf:
        status[0] = ESCALATE; steps[0] = 0; cmin_o[0] = x0; hit_o[0] = hit
        return
    hare = _step(P, x0)
    while True:
        if P.has_limit and hare >= P.limit:
            st = LIMIT
            break
        if hare < cmin:
            cmin = hare
        if hare == P.anchor:
            hit = 1
        if tort == hare:
            break
        if P.has_max and k >= P.max_steps:
            st = STEPS
            break
        if power == lam:
            tort = hare
            power = power * 2
            lam = 0
        if hare > P.ovf:
            st = ESCALATE
            break
        hare = _step(P, hare)
        k += 1
        lam += 1
    status[0] = st; steps[0] = k; cmin_o[0] = cmin; hit_o[0] = hit
    if st != CYCLE:
        return
    tort = x0
    hare = x0
    for i in range(lam):
        hare = _step(P, hare)
    mu = 0
    while tort != hare:
        tort = _step(P, tort)
        hare = _step(P, hare)
        mu += 1
    entry_o[0] = tort
    cyc_min = tort
    off = 0
    v = tort
    for i in range(1, lam):
        v = _step(P, v)
        if v < cyc_min:
            cyc_min = v
            off = i
    steps[0] = mu + off
    cycmin_o[0] = cyc_min
    cyclen_o[0] = lam
    tail_o[0] = mu


def scan(p, q, r, lo, hi, max_steps, limit, anchor=0, accelerated=False):
    """int64 scan of [lo, hi]; rows with status 3 must be recomputed by the caller."""
    cdef Params P
    cdef int64_t n, lo_, size, i
    if p > 256:
        raise ValueError("compiled kernel supports p <= 256")
    P.p = p
    P.q = q
    P.r[0] = 0
    rmax = 0
    for i in range(1, p):
        P.r[i] = r[i - 1]
        rmax = max(rmax, abs(r[i - 1]))
    P.ovf = (INT64_MAX - rmax) // q
    P.has_limit = limit is not None and limit <= INT64_MAX
    P.limit = limit if P.has_limit else 0
    P.has_max = max_steps is not None
    P.max_steps = max_steps if P.has_max else 0
    P.anchor = anchor if 0 <= anchor <= INT64_MAX else -1
    P.accel = accelerated
    lo_ = lo
    size = hi - lo + 1
    status = np.zeros(size, dtype=np.int8)
    hit = np.zeros(size, dtype=np.int8)
    steps = np.zeros(size, dtype=np.int64)
    cmin = np.zeros(size, dtype=np.int64)
    cycmin = np.zeros(size, dtype=np.int64)
    cyclen = np.zeros(size, dtype=np.int64)
    entry = np.zeros(size, dtype=np.int64)
    tail = np.zeros(size, dtype=np.int64)
    cdef int8_t[::1] st_v = status
    cdef int8_t[::1] hit_v = hit
    cdef int64_t[::1] steps_v = steps
    cdef int64_t[::1] cmin_v = cmin
    cdef int64_t[::1] cycmin_v = cycmin
    cdef int64_t[::1] cyclen_v = cyclen
    cdef int64_t[::1] entry_v = entry
    cdef int64_t[::1] tail_v = tail
    with nogil:
        for i in range(size):
            _one(&P, lo_ + i, &st_v[i], &steps_v[i], &cmin_v[i], &cycmin_v[i],
                 &cyclen_v[i], &entry_v[i], &tail_v[i], &hit_v[i])
    return {"status": status, "steps": steps, "cmin": cmin, "cycle_min": cycmin,
            "cycle_len": cyclen, "entry": entry, "tail": tail, "hit": hit}
