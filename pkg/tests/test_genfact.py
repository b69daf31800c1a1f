"""Generalized factorial sums and the smallest-divisor search."""

import pytest

from kurepa.genfact import (
    GenFactResult,
    genfact_residue,
    shortcut_prime,
    smallest_divisor_prime,
)
from kurepa.kernels import residue_naive
from kurepa.modmath import Modulus

from conftest import genfact_mod, trial_division_primes


class TestGenfactResidue:
    def test_k2_p3_divides(self):
        # 1 + 1 + 2**2 = 6, divisible by 3
        assert genfact_residue(2, Modulus(3)) == 0

    def test_k1_is_left_factorial(self):
        assert genfact_residue(1, Modulus(31)) == 2

    def test_k9_p29_divides(self):
        assert genfact_residue(9, Modulus(29)) == 0

    def test_against_bigint_oracle(self):
        for k in (1, 2, 3, 5, 9, 40, 97):
            for p in (3, 5, 7, 11, 29, 101, 233):
                assert genfact_residue(k, Modulus(p)) == genfact_mod(k, p), (k, p)

    def test_k1_reduction_to_naive(self):
        for p in trial_division_primes(3, 10000):
            assert genfact_residue(1, Modulus(p)) == residue_naive(Modulus(p)).r_canonical

    def test_bad_k(self):
        with pytest.raises(ValueError):
            genfact_residue(0, Modulus(7))


class TestShortcut:
    def test_even_k(self):
        assert shortcut_prime(2) == 3
        assert shortcut_prime(4) == 3
        assert shortcut_prime(100) == 3

    def test_k_3_mod_4(self):
        assert shortcut_prime(7) == 5
        assert shortcut_prime(3) == 5
        assert shortcut_prime(99) == 5

    def test_open_case(self):
        assert shortcut_prime(5) is None
        assert shortcut_prime(13) is None
        assert shortcut_prime(97) is None

    def test_bad_k(self):
        with pytest.raises(ValueError):
            shortcut_prime(1)

    def test_shortcut_soundness_small(self):
        for k in range(2, 101, 2):
            assert genfact_residue(k, Modulus(3)) == 0, k
        for k in range(3, 101, 4):
            assert genfact_residue(k, Modulus(5)) == 0, k
            assert genfact_residue(k, Modulus(3)) != 0, k


class TestSmallestDivisorPrime:
    def test_shortcut_path(self):
        got = smallest_divisor_prime(4, bound=100)
        assert got == GenFactResult(k=4, p=3, bound=100, minimal=True)
        got = smallest_divisor_prime(7, bound=100)
        assert got == GenFactResult(k=7, p=5, bound=100, minimal=True)

    def test_open_case_hits(self):
        assert smallest_divisor_prime(9, bound=100).p == 29
        assert smallest_divisor_prime(25, bound=100).p == 61
        assert smallest_divisor_prime(61, bound=100).p == 47

    def test_minimality_flag(self):
        got = smallest_divisor_prime(9, bound=100)
        assert got.minimal
        # every odd prime below 29 must fail to divide
        for q in (3, 5, 7, 11, 13, 17, 19, 23):
            assert genfact_residue(9, Modulus(q)) != 0

    def test_not_found_below_bound(self):
        got = smallest_divisor_prime(13, bound=100)
        assert got.p is None
        assert not got.minimal
        assert got.bound == 100

    def test_parallel_matches_serial(self):
        for k in (9, 33, 41):
            serial = smallest_divisor_prime(k, bound=1000, workers=1)
            parallel = smallest_divisor_prime(k, bound=1000, workers=4)
            assert serial.p == parallel.p and serial.minimal == parallel.minimal

    def test_parallel_keeps_minimality_with_tiny_windows(self, monkeypatch):
        import kurepa.genfact as gf

        monkeypatch.setattr(gf, "_WINDOW", 2)
        assert smallest_divisor_prime(37, bound=200, workers=4).p == 29

    def test_validation(self):
        with pytest.raises(ValueError):
            smallest_divisor_prime(1)
        with pytest.raises(ValueError):
            smallest_divisor_prime(9, bound=2)
