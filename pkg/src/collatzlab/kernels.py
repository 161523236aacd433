"""Backend selection for orbit scanning.

The compiled kernel is used when it imports; set COLLATZLAB_PURE=1 to force
the pure-Python one.  Both return identical results: starts that overflow the
int64 fast path are recomputed here with Python integers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from collatzlab import _pykernels
from collatzlab._pykernels import CYCLE, ESCALATE, FIELDS, LIMIT, STEPS  # noqa: F401

try:
    from collatzlab import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def backend() -> str:
    if _ckernels is None or os.environ.get("COLLATZLAB_PURE"):
        return "python"
    return "cython"


def default_threads() -> int:
    env = os.environ.get("COLLATZLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _scan_block(p, q, r, lo, hi, max_steps, limit, anchor, accelerated, impl):
    if impl == "python" or p > 256:
        return _pykernels.scan(p, q, r, lo, hi, max_steps, limit, anchor, accelerated)
    res = _ckernels.scan(p, q, r, lo, hi, max_steps, limit, anchor, accelerated)
    redo = np.flatnonzero(res["status"] == ESCALATE)
    if redo.size:
        step = _pykernels.make_step(p, q, r, accelerated)
        for i in redo:
            row = _pykernels.orbit_summary(step, lo + int(i), max_steps, limit, anchor)
            for name, val in zip(FIELDS, row):
                arr = res[name]
                if arr.dtype != object and not (-(2**63) <= int(val) < 2**63):
                    arr = res[name] = arr.astype(object)
                arr[i] = val
    return res


def scan_range(
    p: int,
    q: int,
    r,
    lo: int,
    hi: int,
    max_steps: int | None,
    limit: int | None,
    anchor: int = 0,
    accelerated: bool = False,
    threads: int | None = None,
    block: int = 65536,
    impl: str | None = None,
) -> dict[str, np.ndarray]:
    """Per-start orbit summaries for lo..hi, concatenated in start order.

    Blocks run on a thread pool (the compiled kernel releases the GIL); the
    result does not depend on the thread count.
    """
    if lo < 1 or hi < lo:
        raise ValueError(f"need 1 <= lo <= hi, got [{lo}, {hi}]")
    impl = impl or backend()
    threads = threads or default_threads()
    r = tuple(int(v) for v in r)
    bounds = [(s, min(s + block - 1, hi)) for s in range(lo, hi + 1, block)]
    args = (max_steps, limit, anchor, accelerated, impl)
    if threads == 1 or len(bounds) == 1:
        parts = [_scan_block(p, q, r, a, b, *args) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ab: _scan_block(p, q, r, ab[0], ab[1], *args), bounds))
    out = {}
    for name in FIELDS:
        cols = [part[name] for part in parts]
        if any(c.dtype == object for c in cols):
            cols = [c.astype(object) for c in cols]
        out[name] = np.concatenate(cols)
    return out
