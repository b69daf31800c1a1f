"""Segmented prime generation over 64-bit ranges.

Feeds the range scanner: primes come out ascending, in blocks of a bounded
number of primes, so the scanner can hand fixed-size work units to workers
and checkpoint on block boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isqrt
from typing import Iterator

import numpy as np

#: Upper bound on ranges (headroom above the float backend's 2**34 limit).
RANGE_LIMIT = 1 << 40

#: Sieve segment size in flags; sized to stay cache friendly.
DEFAULT_SEGMENT = 1 << 22


@dataclass(frozen=True)
class PrimeBlock:
    """Ascending primes in the half-open range [lo, hi)."""

    lo: int
    hi: int
    primes: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return int(self.primes.size)


def _simple_sieve(limit: int) -> np.ndarray:
    """All primes <= limit, by a plain sieve (base primes for segments)."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for q in range(2, isqrt(limit) + 1):
        if flags[q]:
            flags[q * q :: q] = False
    return np.flatnonzero(flags).astype(np.int64)


def _check_range(lo: int, hi: int) -> None:
    if lo < 0 or hi < lo:
        raise ValueError(f"invalid range [{lo}, {hi})")
    if hi > RANGE_LIMIT:
        raise ValueError(f"range overflow: hi={hi} exceeds 2**40")


def _segments(lo: int, hi: int, segment_size: int) -> Iterator[np.ndarray]:
    """Yield ascending prime arrays covering [lo, hi) segment by segment."""
    if hi <= 2:
        return
    base = _simple_sieve(isqrt(hi - 1))
    start = max(lo, 2)
    while start < hi:
        end = min(start + segment_size, hi)
        flags = np.ones(end - start, dtype=bool)
        for q in base:
            q = int(q)
            if q * q >= end:
                break
            first = max(q * q, (start + q - 1) // q * q)
            if first < end:
                flags[first - start :: q] = False
        if start <= 1:
            flags[: 2 - start] = False
        primes = np.flatnonzero(flags).astype(np.int64) + start
        if primes.size:
            yield primes
        start = end


def primes_in(lo: int, hi: int, segment_size: int = DEFAULT_SEGMENT) -> PrimeBlock:
    """All primes in [lo, hi) as a single block."""
    _check_range(lo, hi)
    parts = list(_segments(lo, hi, segment_size))
    if parts:
        primes = np.concatenate(parts)
    else:
        primes = np.empty(0, dtype=np.int64)
    return PrimeBlock(lo=lo, hi=hi, primes=primes)


def blocks_of(
    lo: int, hi: int, block_size: int, segment_size: int = DEFAULT_SEGMENT
) -> Iterator[PrimeBlock]:
    """Partition the primes of [lo, hi) into blocks of at most block_size.

    Blocks are produced lazily, cover [lo, hi) without gaps, and their
    concatenated primes equal primes_in(lo, hi).
    """
    _check_range(lo, hi)
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    cursor = lo
    pending: list[np.ndarray] = []
    count = 0
    for seg in _segments(lo, hi, segment_size):
        pos = 0
        while seg.size - pos >= block_size - count:
            take = block_size - count
            pending.append(seg[pos : pos + take])
            pos += take
            block = np.concatenate(pending)
            upper = int(block[-1]) + 1
            yield PrimeBlock(lo=cursor, hi=upper, primes=block)
            cursor = upper
            pending = []
            count = 0
        if pos < seg.size:
            pending.append(seg[pos:])
            count += seg.size - pos
    if pending:
        yield PrimeBlock(lo=cursor, hi=hi, primes=np.concatenate(pending))
