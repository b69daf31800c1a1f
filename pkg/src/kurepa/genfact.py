"""Generalized left factorials: sums of k-th powers of factorials mod p.

For the sum of (i!)**k over i < p, even k always admits p = 3 (the terms
reduce to 1 + 1 + 2**k = 0 mod 3) and k = 3 mod 4 admits p = 5, so an
actual search is only needed for k = 1 mod 4.  ``smallest_divisor_prime``
performs that search, ascending, optionally fanning candidate windows out
to worker threads while still reporting the minimal hit.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from . import _jit
from .modmath import Modulus
from .sieve import blocks_of

#: Search ceiling that covers every known smallest prime for k < 100.
DEFAULT_BOUND = 200_000_000

#: Candidate primes handed to a worker at a time.
_WINDOW = 2048


@dataclass(frozen=True)
class GenFactResult:
    """Outcome of a smallest-divisor search for one exponent k."""

    k: int
    p: Optional[int]
    bound: int
    minimal: bool


def genfact_residue(k: int, mod: Modulus) -> int:
    """Sum of (i! mod p)**k for i < p, reduced mod p.

    Each term exponentiates the running reduced factorial (O(log k) products
    per term); k = 1 reproduces the plain left-factorial residue.
    """
    if k < 1:
        raise ValueError("exponent k must be >= 1")
    return int(_jit.genfact_kernel(k, mod.p))


def shortcut_prime(k: int) -> Optional[int]:
    """The known smallest divisor prime for k, or None for the open case.

    Even k: 3 divides.  k = 3 (mod 4): 5 divides (and 3 does not).  k = 1
    (mod 4): unresolved in general; returns None.
    """
    if k < 2:
        raise ValueError("shortcut defined for k >= 2")
    if k % 2 == 0:
        return 3
    if k % 4 == 3:
        return 5
    return None


def smallest_divisor_prime(k: int, bound: int = DEFAULT_BOUND, workers: int | None = None) -> GenFactResult:
    """Smallest odd prime p <= bound dividing the k-th generalized sum.

    Shortcut exponents are answered directly (with the divisibility, and for
    p = 5 the non-divisibility at 3, verified rather than assumed).  The
    open case scans primes ascending in fixed windows; a window's hit is
    only accepted once every earlier window has completed, so the reported
    prime is minimal even under parallel evaluation.
    """
    if k < 2:
        raise ValueError("search defined for k >= 2")
    if bound < 3:
        raise ValueError("bound must be >= 3")
    hint = shortcut_prime(k)
    if hint is not None:
        smaller_clear = hint == 3 or genfact_residue(k, Modulus(3)) != 0
        if genfact_residue(k, Modulus(hint)) == 0 and smaller_clear:
            return GenFactResult(k=k, p=hint, bound=bound, minimal=True)
        raise AssertionError(f"shortcut divisibility failed for k={k}")  # pragma: no cover

    if workers is None:
        workers = int(os.environ.get("KUREPA_WORKERS", "1"))
    windows = (block.primes[block.primes >= 3] for block in blocks_of(3, bound + 1, _WINDOW))

    if workers <= 1:
        for ps in windows:
            hit = int(_jit.genfact_first_hit(k, ps))
            if hit >= 0:
                return GenFactResult(k=k, p=int(ps[hit]), bound=bound, minimal=True)
        return GenFactResult(k=k, p=None, bound=bound, minimal=False)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = []
        exhausted = False
        while True:
            while not exhausted and len(pending) < workers + 2:
                ps = next(windows, None)
                if ps is None:
                    exhausted = True
                    break
                pending.append((pool.submit(_jit.genfact_first_hit, k, ps), ps))
            if not pending:
                return GenFactResult(k=k, p=None, bound=bound, minimal=False)
            fut, ps = pending.pop(0)
            hit = int(fut.result())
            if hit >= 0:
                for later, _ in pending:
                    later.cancel()
                return GenFactResult(k=k, p=int(ps[hit]), bound=bound, minimal=True)
