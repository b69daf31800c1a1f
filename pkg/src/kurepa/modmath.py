"""Exact and floating-point modular arithmetic shared by the residue kernels.

Two backends live side by side:

* an exact integer backend (``mulmod_ref``, ``powmod``) that computes
  double-width products with 32-bit limb arithmetic, and
* a double-precision backend (``round_div``, ``fma_mulmod_offset``) that
  performs modular reduction by inverse multiplication, using fused
  multiply-adds so that intermediate products keep their full 104-bit
  precision until a single final rounding.

The floating-point backend only handles operands below 2**51: adding the
rounding constant ``2**51 + 2**52`` to any |x| < 2**51 lands in the binade
where the unit in the last place is exactly 1, so ``(x + c) - c`` is
round-to-nearest-integer of x.  Both tricks require round-to-nearest-even
and a true (single-rounding) FMA; ``float51_available`` probes for both.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction

#: Largest modulus accepted anywhere (matches the sieve's range headroom).
MODULUS_LIMIT = 1 << 40

#: Largest prime the double-precision backend accepts.
FLOAT51_PRIME_LIMIT = 1 << 34

_M64 = (1 << 64) - 1

# Witnesses proving primality for every n < 3.3e24 (far beyond MODULUS_LIMIT).
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for 64-bit-sized integers."""
    if n < 2:
        return False
    for b in _MR_BASES:
        if n % b == 0:
            return n == b
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for b in _MR_BASES:
        x = pow(b, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    if n <= 2:
        return 2
    n |= 1
    while not is_prime(n):
        n += 2
    return n


@dataclass(frozen=True)
class Float51Constants:
    """Constants for round-to-nearest via the additive rounding trick.

    ``c`` is exactly representable; for any |x| < h = 2**51, ``(x + c) - c``
    computed in doubles equals round-to-nearest-even of x.
    """

    h: float = float(1 << 51)
    c: float = float((1 << 51) + (1 << 52))


#: Shared default constants.
F51 = Float51Constants()


@dataclass(frozen=True)
class Modulus:
    """An odd prime modulus with its precomputed reciprocal.

    ``inv_p`` feeds the inverse-multiplication reduction; ``p_plus_1`` is the
    additive offset that keeps the branch-free reduction strictly positive.
    Callers guarantee primality; it is asserted in debug runs only because
    scan loops construct none of these per prime.
    """

    p: int
    inv_p: float = field(init=False, repr=False)
    p_plus_1: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        p = self.p
        if not isinstance(p, int):
            raise TypeError(f"modulus must be an int, got {type(p).__name__}")
        if p < 3 or p % 2 == 0:
            raise ValueError(f"modulus must be an odd prime >= 3, got {p}")
        if p >= MODULUS_LIMIT:
            raise ValueError(f"modulus {p} out of range (limit 2**40)")
        assert is_prime(p), f"modulus {p} is not prime"
        object.__setattr__(self, "inv_p", 1.0 / p)
        object.__setattr__(self, "p_plus_1", p + 1)

    @property
    def float51_ok(self) -> bool:
        """True when the double-precision backend may be used for this p."""
        return self.p < FLOAT51_PRIME_LIMIT


def fma(a: float, b: float, c: float) -> float:
    """Software fused multiply-add: a*b + c with a single rounding.

    Exact rational arithmetic followed by one correctly-rounded conversion,
    so it matches a hardware FMA bit for bit on finite inputs.  Slow; it is
    the reference the compiled kernels are fuzzed against.
    """
    return float(Fraction(a) * Fraction(b) + Fraction(c))


def mulmod_ref(a: int, b: int, mod: Modulus) -> int:
    """(a*b) mod p via an exact double-width product, for a, b < 2**63.

    Schoolbook 32-bit limb decomposition; each partial product is reduced
    before recombination so every intermediate fits in 64 bits.  This is the
    precise reference path used to audit the floating-point backend.
    """
    p = mod.p
    assert 0 <= a < 1 << 63 and 0 <= b < 1 << 63, "operands must be < 2**63"
    a1, a0 = a >> 32, a & 0xFFFFFFFF
    b1, b0 = b >> 32, b & 0xFFFFFFFF
    hi = a1 * b1 % p
    mid = (a1 * b0 % p + a0 * b1 % p) % p
    # low product split once more: a0*b0 alone can reach 2**64, and the
    # compiled twin of this routine must stay clear of signed overflow
    lo = ((a0 * (b0 >> 16) % p) << 16) % p
    lo = (lo + a0 * (b0 & 0xFFFF)) % p
    # fold hi * 2**64 and mid * 2**32 down in 16-bit shifts (p < 2**40 keeps
    # every shifted value below 2**56)
    r = hi
    r = (r << 16) % p
    r = (r << 16) % p
    r = (r + mid) % p
    r = (r << 16) % p
    r = (r << 16) % p
    return (r + lo) % p


def powmod(a: int, e: int, mod: Modulus) -> int:
    """a**e mod p by square and multiply on top of mulmod_ref."""
    assert 0 <= a < mod.p, "base must be reduced"
    r = 1 % mod.p
    base = a
    while e > 0:
        if e & 1:
            r = mulmod_ref(r, base, mod)
        base = mulmod_ref(base, base, mod)
        e >>= 1
    return r


def round_div(u: float, mod: Modulus, k: Float51Constants = F51) -> float:
    """Nearest-integer quotient u/p, off by at most one, as a double.

    ``fma(u, 1/p, c) - c``: the FMA keeps u * (1/p) unrounded until the
    addition of the rounding constant, which snaps it to an integer.  The
    reciprocal's rounding can push the result one off the true nearest
    integer; callers must absorb a +-1 error.
    """
    return fma(u, mod.inv_p, k.c) - k.c


def fma_mulmod_offset(
    s: float, m_val: float, mod: Modulus, k: Float51Constants = F51
) -> float:
    """Branch-free (s * m_val + 1) modulo p, up to a positive multiple of p.

    Returns ``(p + 1) + (s*m_val - fl(s*m_val)) - (p*b - fl(s*m_val))`` where
    b is the estimated quotient: exactly congruent to s*m_val + 1 mod p and
    confined to (0, 4p).  Both FMA calls round once, after their addition,
    which makes the two remainder terms exact integers.

    Requires s < 2p, m_val < 2**47 and p < 2**34 (the regime in which every
    intermediate stays below 2**51 and the error analysis holds).
    """
    u = s * m_val
    b = fma(u, mod.inv_p, k.c) - k.c
    return mod.p_plus_1 + fma(s, m_val, -u) - fma(float(mod.p), b, -u)


def _round_to_nearest_even_active() -> bool:
    # Both probes are ties: under round-to-nearest-even they drop to the even
    # neighbour; directed rounding modes break at least one of them.
    big = float(1 << 53)
    return big + 1.0 == big and big + 3.0 == big + 4.0


@functools.lru_cache(maxsize=1)
def float51_available() -> bool:
    """True when the compiled FMA is fused and rounding is nearest-even.

    Checked once per process; the float backend refuses to run otherwise and
    callers fall back to the exact backend.
    """
    if not _round_to_nearest_even_active():
        return False
    from . import _jit

    return _jit.fused_fma_ok()


def require_float51(p: int) -> None:
    """Validate that the float backend may run for prime p."""
    if p >= FLOAT51_PRIME_LIMIT:
        raise ValueError(
            f"p={p} exceeds the float backend limit 2**34; use exact128"
        )
    if not float51_available():
        raise RuntimeError(
            "float backend unavailable: platform lacks fused multiply-add "
            "or is not rounding to nearest-even"
        )
