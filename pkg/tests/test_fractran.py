from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collatzlab.core import OrbitBudget, Status
from collatzlab.fractran import (
    FractranProgram,
    PeriodicMapTable,
    collatz_to_fractran,
    extract_power_exponents,
    fractran_iter,
    fractran_run,
    fractran_step,
    fractran_to_collatz,
    parse_program,
    prime_game,
    random_total_game,
    stream_power_exponents,
)


def first_integer_oracle(fractions, n):
    for f in fractions:
        v = f * n
        if v.denominator == 1:
            return int(v)
    return None


def is_prime(n):
    return n >= 2 and all(n % d for d in range(2, int(n**0.5) + 1))


def test_prime_game_file():
    P = prime_game()
    assert len(P) == 14
    assert P.fractions[0] == Fr(17, 91) and P.fractions[-1] == 55


def test_step_examples():
    assert fractran_step(prime_game(), 4) == 30
    assert fractran_step(FractranProgram((Fr(1, 2), Fr(3))), 6) == 3
    assert fractran_step(FractranProgram((Fr(1, 2),)), 3) is None


@given(st.integers(1, 10**9))
def test_step_matches_oracle_on_prime_game(n):
    P = prime_game()
    assert fractran_step(P, n) == first_integer_oracle(P.fractions, n)


def test_run_halts_and_budgets():
    t = fractran_run(FractranProgram((Fr(1, 2),)), 8, OrbitBudget())
    assert t.values == [8, 4, 2, 1] and t.status is Status.HALTED
    t = fractran_run(prime_game(), 4, OrbitBudget(max_steps=100))
    assert t.status is Status.BUDGET_STEPS and len(t.values) == 101


def test_prime_game_runs_a_million_steps():
    steps = 0
    for steps, _ in enumerate(fractran_iter(prime_game(), 4)):
        if steps >= 10**6:
            break
    assert steps == 10**6


def test_extract_exponents():
    assert extract_power_exponents([8], 2) == [3]
    assert extract_power_exponents([6, 10, 12], 2) == []
    t = fractran_run(prime_game(), 4, OrbitBudget(max_steps=20_000))
    exps = extract_power_exponents(t, 2)
    assert exps[:8] == [2, 3, 5, 7, 11, 13, 17, 19]


def test_prime_exponents_strictly_increasing_primes():
    exps, _, status = stream_power_exponents(prime_game(), 4, 2, 10, 10**6)
    assert status is None
    assert all(is_prime(e) for e in exps)
    assert all(a < b for a, b in zip(exps, exps[1:]))


def test_parse_program():
    F = parse_program("# doubling\n3/2\n\n1/3  # comment\n5\n")
    assert F.fractions == (Fr(3, 2), Fr(1, 3), Fr(5))
    with pytest.raises(ValueError):
        parse_program("3/0\n")
    with pytest.raises(ValueError):
        parse_program("-1/2\n")
    assert parse_program(prime_game().to_text()) == prime_game()


def test_to_collatz_examples():
    T = fractran_to_collatz(FractranProgram((Fr(5, 6), Fr(7, 3), Fr(2))))
    assert T.modulus == 6
    assert T.partition == (frozenset({6}), frozenset({3}), frozenset({1, 2, 4, 5}))
    assert T.last_is_integer
    assert all(T.step(n) == fractran_step(FractranProgram((Fr(5, 6), Fr(7, 3), Fr(2))), n)
               for n in range(1, 101))
    T = fractran_to_collatz(FractranProgram((Fr(3),)))
    assert T.modulus == 1 and T.step(7) == 21
    with pytest.raises(ValueError, match="residue 1 mod 2"):
        fractran_to_collatz(FractranProgram((Fr(1, 2),)))


def test_partition_covers_residues_disjointly():
    rng = np.random.default_rng(5)
    for _ in range(20):
        T = fractran_to_collatz(random_total_game(rng))
        union = set().union(*T.partition)
        assert union == set(range(1, T.modulus + 1))
        assert sum(len(u) for u in T.partition) == T.modulus


def test_total_game_without_integer_fraction():
    # residue coverage accepts games whose last fraction is not an integer
    F = FractranProgram((Fr(1, 2), Fr(3, 1), Fr(1, 5)))
    T = fractran_to_collatz(F)
    assert not T.last_is_integer
    assert all(T.step(n) == fractran_step(F, n) for n in range(1, 1000))


def test_round_trip_reproduces_step():
    rng = np.random.default_rng(11)
    for _ in range(20):
        F = random_total_game(rng, size=int(rng.integers(1, 6)))
        G = collatz_to_fractran(fractran_to_collatz(F))
        assert all(fractran_step(F, n) == fractran_step(G, n) for n in range(1, 10_001))


def test_round_trip_from_hand_table():
    # N -> N/2 on multiples of 2, N -> 3N otherwise, modulus 2
    T = PeriodicMapTable(2, {1: (3, 1), 2: (1, 2)}, (frozenset({2}), frozenset({1})), True)
    G = collatz_to_fractran(T)
    assert all(fractran_step(G, n) == T.step(n) for n in range(1, 10_001))


def test_round_trip_rejects_non_gcd_tables():
    T = PeriodicMapTable(4, {1: (3, 1), 2: (1, 2), 3: (5, 1), 4: (1, 2)},
                         (frozenset(),), True)
    with pytest.raises(ValueError):
        collatz_to_fractran(T)
