import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collatzlab import _pykernels, kernels
from collatzlab.core import CLASSIC, PRESETS, MapSpec, c_step

needs_cython = pytest.mark.skipif(kernels.backend() != "cython", reason="compiled kernel not built")


def brute_summary(spec, n, max_steps, limit):
    """Status, steps to the cycle minimum, running min and the cycle, by a seen-dict."""
    seen = {}
    vals = [n]
    cmin = n
    k = 0
    while n not in seen:
        if limit is not None and n >= limit:
            return "limit", cmin
        seen[n] = k
        if k >= max_steps:
            return "steps", cmin
        n = c_step(spec, n)
        cmin = min(cmin, n)
        vals.append(n)
        k += 1
    cyc = vals[seen[n]:-1]
    m = min(cyc)
    return ("cycle", vals.index(m), cmin, m, len(cyc)), cmin


@pytest.mark.parametrize("name", ["classic", "3x-1", "m4-6-a", "m3-6", "m4-6-noc", "m12-15"])
def test_python_kernel_matches_brute_force(name):
    spec = PRESETS[name]
    rows = _pykernels.scan(spec.p, spec.q, spec.r, 1, 400, 100_000, None)
    for i, n in enumerate(range(1, 401)):
        want, _ = brute_summary(spec, n, 100_000, None)
        _, steps, cmin, cycmin, lam = want
        assert rows["status"][i] == kernels.CYCLE
        assert (rows["steps"][i], rows["cmin"][i], rows["cycle_min"][i], rows["cycle_len"][i]) == (
            steps, cmin, cycmin, lam)


def test_classic_31_takes_106_steps():
    rows = kernels.scan_range(2, 3, (1,), 31, 31, 10_000, None)
    assert rows["steps"][0] == 106


def test_budget_statuses():
    spec = PRESETS["m4-6-div"]
    rows = kernels.scan_range(spec.p, spec.q, spec.r, 9, 9, 10_000, 10**100)
    assert rows["status"][0] == kernels.LIMIT
    rows = kernels.scan_range(spec.p, spec.q, spec.r, 9, 9, 50, None)
    assert rows["status"][0] == kernels.STEPS and rows["steps"][0] == 50


def _same(a, b):
    for f in kernels.FIELDS:
        assert np.array_equal(a[f].astype(object), b[f].astype(object)), f


@needs_cython
@pytest.mark.parametrize("name", list(PRESETS))
def test_backends_agree_on_presets(name):
    spec = PRESETS[name]
    args = (spec.p, spec.q, spec.r, 1, 3000, 5000, 10**40)
    _same(kernels.scan_range(*args, impl="python"), kernels.scan_range(*args, impl="cython"))


@needs_cython
@settings(max_examples=25)
@given(st.integers(2, 5), st.integers(2, 9), st.data(), st.booleans())
def test_backends_agree_on_random_maps(p, q, data, accelerated):
    r = tuple(data.draw(st.integers(1 - q * j, 20)) for j in range(1, p))
    if accelerated:
        r = tuple(p * data.draw(st.integers(1, 3)) - q * j for j in range(1, p))
    anchor = data.draw(st.integers(0, 50))
    spec = MapSpec(p, q, r)
    args = (spec.p, spec.q, spec.r, 1, 300, 2000, 10**25, anchor, accelerated)
    _same(kernels.scan_range(*args, impl="python"), kernels.scan_range(*args, impl="cython"))


@needs_cython
def test_overflow_escalates_to_exact_integers():
    spec = PRESETS["m4-6-div"]
    big = 2**62
    args = (spec.p, spec.q, spec.r, big, big + 20, 300, None)
    a = kernels.scan_range(*args, impl="python")
    b = kernels.scan_range(*args, impl="cython")
    _same(a, b)
    assert b["cmin"].dtype == object or b["cmin"].max() < 2**63


def test_scan_is_independent_of_threads_and_blocks():
    one = kernels.scan_range(2, 3, (1,), 1, 5000, 10_000, None, threads=1, block=5000)
    many = kernels.scan_range(2, 3, (1,), 1, 5000, 10_000, None, threads=4, block=333)
    _same(one, many)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("COLLATZLAB_THREADS", "3")
    assert kernels.default_threads() == 3


def test_pure_env_forces_python(monkeypatch):
    monkeypatch.setenv("COLLATZLAB_PURE", "1")
    assert kernels.backend() == "python"


def test_range_validation():
    with pytest.raises(ValueError):
        kernels.scan_range(2, 3, (1,), 0, 5, 10, None)
