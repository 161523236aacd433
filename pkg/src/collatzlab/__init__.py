"""collatzlab: generalized Collatz maps C_{p,q,r}, their Syracuse accelerations,
and the probabilistic models used to study them."""

__version__ = "0.1.0"

from collatzlab.core import (  # noqa: F401
    CLASSIC,
    PRESETS,
    MapSpec,
    OrbitBudget,
    OrbitTrace,
    Status,
    c_step,
    iterate_c,
    iterate_s,
    s_step,
    validate_conditions,
)
