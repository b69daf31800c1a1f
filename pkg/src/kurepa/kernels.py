"""Residue algorithms: every way this package computes r_p = !p mod p.

Five algorithms, all O(p): a direct factorial sum, three classical
recurrences (kept as cross-checking oracles), and the halved-reduction
recurrence ``s <- (m*s + 1) mod p`` whose multiplier m advances by simple
additions and only needs a modular reduction once per chunk.  The fast
recurrence runs on one of two backends:

* ``float51`` - double precision with fused multiply-adds and branch-free
  inverse-multiplication reduction (p < 2**34 only), or
* ``exact128`` - exact integer remainders on the same deferred schedule.

Residues are reported both canonically (in [0, p)) and signed (in
[-(p-1)/2, (p-1)/2], the convention used for small-residue tables).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import _jit
from .modmath import Modulus, float51_available, require_float51

Backend = Literal["float51", "exact128"]

#: Default iterations between modular reductions of the deferred multiplier.
DEFAULT_CHUNK = 10000


@dataclass(frozen=True)
class ResidueRecord:
    """A prime p with its residue !p mod p in both presentations."""

    p: int
    r_canonical: int
    r_signed: int

    def __post_init__(self) -> None:
        if not 0 <= self.r_canonical < self.p:
            raise ValueError(f"canonical residue {self.r_canonical} not in [0, {self.p})")
        if abs(self.r_signed) > (self.p - 1) // 2:
            raise ValueError(f"signed residue {self.r_signed} out of range for p={self.p}")
        if (self.r_signed - self.r_canonical) % self.p != 0:
            raise ValueError("signed and canonical residues disagree")

    @classmethod
    def from_canonical(cls, p: int, r: int) -> "ResidueRecord":
        r_signed = r if r <= (p - 1) // 2 else r - p
        return cls(p, r, r_signed)

    @classmethod
    def from_signed(cls, p: int, r_signed: int) -> "ResidueRecord":
        return cls(p, r_signed % p, r_signed)

    @property
    def is_counterexample(self) -> bool:
        return self.r_canonical == 0


@dataclass(frozen=True)
class KernelState:
    """Resumable state of the fast recurrence between chunks.

    At index i the state holds the s produced by step i-1 together with the
    multiplier m = (4i**2 - 2i - 2) mod p and increment k = (8i + 2) mod p
    that step i will consume.  The bootstrap state at i = 1 carries m = 0,
    which forces s_1 = 1 regardless of the stored s.  All fields are plain
    integers (normalized mod p), so states move freely between workers.
    """

    s: int
    m: int
    k: int
    i: int
    mod: Modulus

    def __post_init__(self) -> None:
        p = self.mod.p
        if not 1 <= self.i <= (p - 3) // 2 + 1:
            raise ValueError(f"index {self.i} out of range for p={p}")
        i = self.i
        if self.m != (4 * i * i - 2 * i - 2) % p or self.k != (8 * i + 2) % p:
            raise ValueError("state multiplier/increment do not match index")
        if not 0 <= self.s < p:
            raise ValueError("state s not normalized")

    @classmethod
    def initial(cls, mod: Modulus) -> "KernelState":
        return cls(s=1 % mod.p, m=0, k=10 % mod.p, i=1, mod=mod)

    @property
    def done(self) -> bool:
        return self.i > (self.mod.p - 3) // 2

    def residue(self) -> ResidueRecord:
        """Close the recurrence: r_p = (1 + 3*s) mod p. Valid once done."""
        if not self.done:
            raise ValueError("kernel state has not consumed all iterations")
        return ResidueRecord.from_canonical(self.mod.p, (1 + 3 * self.s) % self.mod.p)


def resolve_backend(backend: Backend, p: int | None = None) -> Backend:
    """Validate a backend choice, falling back when float51 cannot run."""
    if backend not in ("float51", "exact128"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "float51" and not float51_available():
        warnings.warn(
            "float51 backend unavailable (no fused FMA or wrong rounding "
            "mode); falling back to exact128",
            RuntimeWarning,
            stacklevel=2,
        )
        return "exact128"
    if backend == "float51" and p is not None:
        require_float51(p)
    return backend


def residue_naive(mod: Modulus) -> ResidueRecord:
    """Direct summation 0! + 1! + ... + (p-1)! mod p."""
    r, _ = _jit.naive_kernel(mod.p)
    return ResidueRecord.from_canonical(mod.p, int(r))


def residue_rec_a(mod: Modulus) -> ResidueRecord:
    """Nested-product recurrence a_i = (1 - i*a_{i-1}) mod p, a_1 = 0."""
    return ResidueRecord.from_canonical(mod.p, int(_jit.rec_a_kernel(mod.p)))


def residue_rec_b(mod: Modulus) -> ResidueRecord:
    """Alternating recurrence b_i = ((-1)**i + i*b_{i-1}) mod p, b_1 = 0."""
    return ResidueRecord.from_canonical(mod.p, int(_jit.rec_b_kernel(mod.p)))


def residue_rec_cd(mod: Modulus) -> ResidueRecord:
    """Paired running factorial/sum recurrence ending at c_p."""
    return ResidueRecord.from_canonical(mod.p, int(_jit.rec_cd_kernel(mod.p)))


def step_chunk(state: KernelState, backend: Backend = "float51", count: int = DEFAULT_CHUNK) -> KernelState:
    """Advance a kernel state by min(count, remaining) iterations, then normalize.

    Deterministic: the result depends only on (state, backend, count).  The
    requested count is honored exactly; internally it may be split at the
    backend's overflow-safety bound, with m and k reduced at the splits.
    """
    mod = state.mod
    p = mod.p
    backend = resolve_backend(backend, p if backend == "float51" else None)
    half = (p - 3) // 2
    remaining = max(0, half - state.i + 1)
    todo = min(max(0, count), remaining)
    i = state.i
    s, m, k = state.s, state.m, state.k
    while todo > 0:
        if backend == "float51":
            cap = _jit.float_chunk_cap(todo, p)
            fs, fm, fk = _jit.float_chunk(
                float(s), float(m), float(k), float(i), float(i + cap - 1),
                float(p), mod.inv_p, float(mod.p_plus_1),
            )
            s, m, k = int(fs), int(fm), int(fk)
        else:
            cap = _jit.exact_chunk_cap(todo, p)
            s, m, k = _jit.exact_chunk(s, m, k, i, i + cap - 1, p, mod.inv_p)
            s, m, k = int(s), int(m), int(k)
        i += cap
        todo -= cap
        s, m, k = s % p, m % p, k % p
    return KernelState(s=s % p, m=m % p, k=k % p, i=i, mod=mod)


def residue_fast(mod: Modulus, backend: Backend = "float51", chunk: int = DEFAULT_CHUNK) -> ResidueRecord:
    """Halved-reduction residue: O(p/2) steps, reductions deferred per chunk.

    For p = 3 the recurrence has no terms and the direct sum is used.  The
    float backend rejects p >= 2**34; chunk is clamped to the backend's
    overflow-safety bound where necessary.
    """
    if chunk < 1:
        raise ValueError("chunk must be >= 1")
    p = mod.p
    if p < 5:
        return residue_naive(mod)
    backend = resolve_backend(backend, p if backend == "float51" else None)
    state = KernelState.initial(mod)
    while not state.done:
        state = step_chunk(state, backend, chunk)
    return state.residue()


def residue_fast_batch(
    ps: np.ndarray, backend: Backend = "float51", chunk: int = DEFAULT_CHUNK
) -> np.ndarray:
    """Canonical residues for an ascending array of odd primes.

    The workhorse of range scanning: primes run in lockstep lanes inside a
    single compiled loop.  Returns int64 canonical residues, aligned with ps.
    """
    ps = np.ascontiguousarray(ps, dtype=np.int64)
    if ps.size == 0:
        return np.empty(0, dtype=np.int64)
    pmax = int(ps.max())
    pmin = int(ps.min())
    if pmin < 3 or pmin % 2 == 0:
        raise ValueError("batch primes must be odd and >= 3")
    backend = resolve_backend(backend, pmax if backend == "float51" else None)
    out = np.empty(ps.size, dtype=np.int64)
    if backend == "float51":
        _jit.residue_batch_float(ps, chunk, out)
    else:
        _jit.residue_batch_exact(ps, chunk, out)
    return out


#: Algorithm registry for the CLI and the verification paths.
ALGORITHMS = {
    "naive": residue_naive,
    "rec-a": residue_rec_a,
    "rec-b": residue_rec_b,
    "rec-cd": residue_rec_cd,
    "fast": residue_fast,
}
