"""Shared oracles and hypothesis settings for the test suite."""

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

# jit warmup makes first-call timing wild; never let deadlines flake tests
settings.register_profile(
    "kurepa",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("kurepa")


def left_factorial_mod(p: int) -> int:
    """Direct big-integer oracle: (0! + 1! + ... + (p-1)!) mod p."""
    total, fact = 0, 1
    for i in range(p):
        total += fact
        fact *= i + 1
    return total % p


def left_factorial_mod_running(p: int) -> int:
    """Same oracle with reduced running values (cheap for big p)."""
    total, fact = 1, 1
    for i in range(1, p):
        fact = fact * i % p
        total = (total + fact) % p
    return total


def genfact_mod(k: int, p: int) -> int:
    """Big-integer oracle for the sum of (i!)**k mod p."""
    total, fact = 0, 1
    for i in range(p):
        total = (total + pow(fact, k, p)) % p
        fact = fact * (i + 1) % p
    return total


def trial_division_primes(lo: int, hi: int) -> list[int]:
    """Primes in [lo, hi) by trial division."""
    out = []
    for n in range(max(lo, 2), hi):
        if all(n % d for d in range(2, int(n**0.5) + 1)):
            out.append(n)
    return out


@pytest.fixture(scope="session")
def small_primes() -> list[int]:
    return trial_division_primes(3, 2000)


#: !p mod p for small primes, frozen from the big-integer oracle above.
SMALL_RESIDUES = {
    3: 1, 5: 4, 7: 6, 11: 1, 13: 10, 17: 13, 19: 9, 23: 21, 29: 17,
    31: 2, 37: 5, 41: 4, 43: 16, 47: 18, 53: 13, 59: 28, 61: 22,
    67: 65, 71: 68, 73: 55, 79: 20, 83: 27, 89: 76, 97: 80, 101: 13,
}
