"""Compiled kernels: the hot loops behind the residue algorithms.

Everything here is numba-jitted and operates on plain machine scalars and
arrays; the public modules wrap these in validated APIs.  The fused
multiply-add is emitted directly as the LLVM ``llvm.fma`` intrinsic so the
product is rounded exactly once, which the branch-free reduction depends on.

Batch kernels interleave LANES primes in lockstep so the FMA pipeline stays
full on a single core; a lane whose prime is exhausted freezes in place and
costs only its predicate check.
"""

from __future__ import annotations

import math

import numpy as np
from llvmlite import ir
from numba import njit, types
from numba.extending import intrinsic

#: Rounding constant: adding it to |x| < 2**51 and subtracting it back yields
#: round-to-nearest-even of x (the sum lands where ulp == 1).
C51 = float((1 << 51) + (1 << 52))

#: Primes per lockstep group in the batch kernels.
LANES = 8

#: Largest p whose squared remainder fits a signed 64-bit product.
_DIRECT_MUL_LIMIT = 3037000500

#: Keep the deferred multiplier m below these bounds between reductions.
_FLOAT_M_BOUND = 1 << 49
_EXACT_M_BOUND = 1 << 51


@intrinsic
def _fma(typingctx, a, b, c):
    """Fused a*b + c on float64: one rounding, after the addition."""
    if not all(t == types.float64 for t in (a, b, c)):
        return None
    sig = types.float64(types.float64, types.float64, types.float64)

    def codegen(context, builder, signature, args):
        ty = ir.DoubleType()
        fnty = ir.FunctionType(ty, [ty, ty, ty])
        fn = builder.module.declare_intrinsic("llvm.fma", [ty], fnty)
        return builder.call(fn, args)

    return sig, codegen


@njit(cache=True)
def fma64(a, b, c):
    """Compiled fused multiply-add, exposed for tests and probes."""
    return _fma(a, b, c)


def fused_fma_ok() -> bool:
    """Probe that the compiled FMA really fuses (keeps the low product bits)."""
    a = 1.0 + 2.0**-30
    b = 1.0 - 2.0**-30
    # unfused a*b rounds to 1.0 and loses the -2**-60 tail entirely
    return fma64(a, b, -1.0) == -(2.0**-60)


def float_chunk_cap(chunk: int, p: int) -> int:
    """Iterations the float kernel may defer before m could reach 2**49."""
    return max(1, min(chunk, 1 << 17, (_FLOAT_M_BOUND - p) // (p + (1 << 20))))


def exact_chunk_cap(chunk: int, p: int) -> int:
    """Iterations the exact kernel may defer before m could reach 2**51."""
    return max(1, min(chunk, 1 << 17, (_EXACT_M_BOUND - p) // (p + (1 << 20))))


# ---------------------------------------------------------------------------
# exact double-width helpers


@njit(cache=True, nogil=True)
def mulmod_limb(a, b, p):
    """(a*b) mod p by 32-bit limb schoolbook; a, b < 2**63, p < 2**40.

    The low product is split once more (b0 into 16-bit halves) because
    a0*b0 alone can reach 2**64 and must not touch the signed-overflow
    edge; every other partial product stays below 2**63.
    """
    a1 = a >> 32
    a0 = a & 0xFFFFFFFF
    b1 = b >> 32
    b0 = b & 0xFFFFFFFF
    hi = a1 * b1 % p
    mid = (a1 * b0 % p + a0 * b1 % p) % p
    lo = ((a0 * (b0 >> 16) % p) << 16) % p
    lo = (lo + a0 * (b0 & 0xFFFF)) % p
    r = hi
    r = (r << 16) % p
    r = (r << 16) % p
    r = (r + mid) % p
    r = (r << 16) % p
    r = (r << 16) % p
    return (r + lo) % p


@njit(cache=True, nogil=True, inline="always")
def _mm_est(a, b, p, g):
    """(a*b) mod p for a, b < p < 2**31: estimated quotient, exact fixup.

    The float path only picks the quotient; the remainder is recovered with
    wrapping integer arithmetic, so the result is exact for any estimate
    error, which the two-step correction bounds absorb.
    """
    u = a * b
    q = np.int64(_fma(float(a) * float(b), g, C51) - C51)
    r = u - q * p
    if r < 0:
        r += p
    if r < 0:
        r += p
    if r >= p:
        r -= p
    if r >= p:
        r -= p
    return r


@njit(cache=True, nogil=True)
def powmod_u64(a, e, p):
    """a**e mod p for p < 2**40."""
    r = np.int64(1 % p)
    b = a % p
    if p < _DIRECT_MUL_LIMIT:
        g = 1.0 / p
        while e > 0:
            if e & 1:
                r = _mm_est(r, b, p, g)
            b = _mm_est(b, b, p, g)
            e >>= 1
    else:
        while e > 0:
            if e & 1:
                r = mulmod_limb(r, b, p)
            b = mulmod_limb(b, b, p)
            e >>= 1
    return r


# ---------------------------------------------------------------------------
# full-length residue algorithms (one pass of p multiplications)


@njit(cache=True, nogil=True)
def naive_kernel(p):
    """Sum of factorials 0! + 1! + ... + (p-1)! mod p.

    Returns (residue, (p-1)! mod p); the second value feeds the Wilson
    sanity check.
    """
    r = np.int64(1)  # 0!
    f = np.int64(1)
    if p < _DIRECT_MUL_LIMIT:
        for i in range(1, p):
            f = f * i % p
            r = (r + f) % p
    else:
        for i in range(1, p):
            f = mulmod_limb(f, np.int64(i), p)
            r = (r + f) % p
    return r, f


@njit(cache=True, nogil=True)
def rec_a_kernel(p):
    """Nested-product recurrence: a <- (1 - i*a) mod p, ending at i = p-1."""
    a = np.int64(0)
    if p < _DIRECT_MUL_LIMIT:
        for i in range(2, p):
            a = (1 - i * a) % p
    else:
        for i in range(2, p):
            t = mulmod_limb(a, np.int64(i), p)
            a = (1 - t) % p
    return a if a >= 0 else a + p


@njit(cache=True, nogil=True)
def rec_b_kernel(p):
    """Alternating-sign recurrence: b <- ((-1)**i + i*b) mod p.

    Without the reduction this generates the derangement numbers.
    """
    b = np.int64(0)
    sign = np.int64(1)  # (-1)**i for i = 2
    if p < _DIRECT_MUL_LIMIT:
        for i in range(2, p):
            b = (sign + i * b) % p
            sign = -sign
    else:
        for i in range(2, p):
            t = mulmod_limb(b, np.int64(i), p)
            b = (sign + t) % p
            sign = -sign
    return b if b >= 0 else b + p


@njit(cache=True, nogil=True)
def rec_cd_kernel(p):
    """Running factorial plus running sum: c_i = c_{i-1} + d_{i-1}, d_i = i*d_{i-1}."""
    c = np.int64(1)
    d = np.int64(1)
    if p < _DIRECT_MUL_LIMIT:
        for i in range(2, p + 1):
            c = (c + d) % p
            d = d * i % p
    else:
        for i in range(2, p + 1):
            c = (c + d) % p
            d = mulmod_limb(d, np.int64(i), p)
    return c


# ---------------------------------------------------------------------------
# halved-reduction kernel: s <- (m*s + 1) mod p with m, k deferred
#
# Entering an iteration at index i, the state holds the previous s and
# m = (4i**2 - 2i - 2) mod p, k = (8i + 2) mod p; the step consumes m,
# produces the next s, and advances m += k, k += 8 without reduction.
# The bootstrap index i = 1 has m = 0, which regenerates s_1 = 1 from any s.


@njit(cache=True, nogil=True)
def float_chunk(s, m, k, i, i_end, p, g, p1):
    """Run steps i..i_end of the recurrence in doubles; no final reduction.

    All arguments are integer-valued doubles (except the loop bounds).  The
    quotient estimate b is within one of round(u/p), so s stays in (0, 4p);
    the two FMA remainder terms are exact integers by the single-rounding
    property.
    """
    step = i
    while step <= i_end:
        u = s * m
        b = _fma(u, g, C51) - C51
        s = p1 + _fma(s, m, -u) - _fma(p, b, -u)
        m = m + k
        k = k + 8.0
        step += 1
    return s, m, k


@njit(cache=True, nogil=True)
def exact_chunk(s, m, k, i, i_end, p, g):
    """Run steps i..i_end exactly: s reduced every step, m and k deferred."""
    step = i
    mf = float(m)
    while step <= i_end:
        u = s * m
        q = np.int64(_fma(float(s) * mf, g, C51) - C51)
        r = u - q * p
        if r < 0:
            r += p
        if r < 0:
            r += p
        if r >= p:
            r -= p
        if r >= p:
            r -= p
        s = r + 1
        mf = mf + float(k)
        m = m + k
        k = k + 8
        step += 1
    return s, m, k


@njit(cache=True, nogil=True)
def residue_batch_float(ps, chunk, out):
    """Canonical residues for an array of odd primes, float backend.

    Primes are processed in lockstep groups of LANES; within a group the
    deferred-reduction schedule is shared and sized for the largest prime.
    """
    n = ps.shape[0]
    s = np.empty(LANES, np.float64)
    m = np.empty(LANES, np.float64)
    k = np.empty(LANES, np.float64)
    g = np.empty(LANES, np.float64)
    pf = np.empty(LANES, np.float64)
    p1 = np.empty(LANES, np.float64)
    half = np.empty(LANES, np.int64)
    for base in range(0, n, LANES):
        width = min(LANES, n - base)
        hmax = np.int64(0)
        pmax = np.int64(0)
        for l in range(LANES):
            p = ps[base + min(l, width - 1)]
            s[l] = 1.0
            m[l] = 0.0
            k[l] = float(10 % p)
            g[l] = 1.0 / p
            pf[l] = float(p)
            p1[l] = float(p + 1)
            half[l] = (p - 3) // 2
            if half[l] > hmax:
                hmax = half[l]
            if p > pmax:
                pmax = p
        cap = min(chunk, 1 << 17, (_FLOAT_M_BOUND - pmax) // (pmax + (1 << 20)))
        if cap < 1:
            cap = 1
        i = np.int64(1)
        while i <= hmax:
            i_end = min(i + cap - 1, hmax)
            for step in range(i, i_end + 1):
                for l in range(LANES):
                    if step <= half[l]:
                        u = s[l] * m[l]
                        b = _fma(u, g[l], C51) - C51
                        s[l] = p1[l] + _fma(s[l], m[l], -u) - _fma(pf[l], b, -u)
                        m[l] = m[l] + k[l]
                        k[l] = k[l] + 8.0
            for l in range(LANES):
                p = np.int64(pf[l])
                s[l] = float(np.int64(s[l]) % p)
                m[l] = float(np.int64(m[l]) % p)
                k[l] = float(np.int64(k[l]) % p)
            i = i_end + 1
        for l in range(width):
            p = np.int64(pf[l])
            if p == 3:
                out[base + l] = 1  # 0!+1!+2! = 4
            else:
                out[base + l] = (1 + 3 * np.int64(s[l])) % p
    return out


@njit(cache=True, nogil=True)
def residue_batch_exact(ps, chunk, out):
    """Canonical residues for an array of odd primes, exact backend.

    Same deferred schedule as the float kernel, but s is reduced exactly on
    every step: the quotient comes from a double estimate, the remainder
    from wrapping 64-bit arithmetic, and the correction makes the estimate
    error irrelevant.
    """
    n = ps.shape[0]
    s = np.empty(LANES, np.int64)
    m = np.empty(LANES, np.int64)
    k = np.empty(LANES, np.int64)
    mf = np.empty(LANES, np.float64)
    g = np.empty(LANES, np.float64)
    pq = np.empty(LANES, np.int64)
    half = np.empty(LANES, np.int64)
    for base in range(0, n, LANES):
        width = min(LANES, n - base)
        hmax = np.int64(0)
        pmax = np.int64(0)
        for l in range(LANES):
            p = ps[base + min(l, width - 1)]
            s[l] = 1
            m[l] = 0
            k[l] = 10 % p
            mf[l] = 0.0
            g[l] = 1.0 / p
            pq[l] = p
            half[l] = (p - 3) // 2
            if half[l] > hmax:
                hmax = half[l]
            if p > pmax:
                pmax = p
        cap = min(chunk, 1 << 17, (_EXACT_M_BOUND - pmax) // (pmax + (1 << 20)))
        if cap < 1:
            cap = 1
        i = np.int64(1)
        while i <= hmax:
            i_end = min(i + cap - 1, hmax)
            for step in range(i, i_end + 1):
                for l in range(LANES):
                    if step <= half[l]:
                        pl = pq[l]
                        u = s[l] * m[l]
                        q = np.int64(_fma(float(s[l]) * mf[l], g[l], C51) - C51)
                        r = u - q * pl
                        if r < 0:
                            r += pl
                        if r < 0:
                            r += pl
                        if r >= pl:
                            r -= pl
                        if r >= pl:
                            r -= pl
                        s[l] = r + 1
                        mf[l] = mf[l] + float(k[l])
                        m[l] = m[l] + k[l]
                        k[l] = k[l] + 8
            for l in range(LANES):
                m[l] = m[l] % pq[l]
                k[l] = k[l] % pq[l]
                mf[l] = float(m[l])
            i = i_end + 1
        for l in range(width):
            p = pq[l]
            if p == 3:
                out[base + l] = 1  # 0!+1!+2! = 4
            else:
                out[base + l] = (1 + 3 * s[l]) % p
    return out


# ---------------------------------------------------------------------------
# generalized factorial sums


@njit(cache=True, nogil=True)
def genfact_kernel(k, p):
    """Sum of (i!)**k for i < p, mod p; each term by square and multiply."""
    acc = np.int64(0)
    f = np.int64(1)
    if p < 2147483648:
        g = 1.0 / p
        for i in range(p):
            b = f
            e = k
            t = np.int64(1)
            while e > 0:
                if e & 1:
                    t = _mm_est(t, b, p, g)
                b = _mm_est(b, b, p, g)
                e >>= 1
            acc = (acc + t) % p
            f = _mm_est(f, np.int64(i + 1), p, g)
    else:
        for i in range(p):
            t = powmod_u64(f, np.int64(k), p)
            acc = (acc + t) % p
            f = mulmod_limb(f, np.int64(i + 1), p)
    return acc


@njit(cache=True, nogil=True)
def genfact_first_hit(k, ps):
    """Index of the first prime in ps dividing its generalized sum, else -1."""
    for j in range(ps.shape[0]):
        if genfact_kernel(k, ps[j]) == 0:
            return j
    return -1


# ---------------------------------------------------------------------------
# fuzz helpers (bulk evaluation for the oracle comparisons in tests)


@njit(cache=True, nogil=True)
def fma_offset_arr(ss, ms, ps, out):
    """fma_mulmod_offset over arrays of integer-valued operands."""
    for j in range(ss.shape[0]):
        sf = float(ss[j])
        mf = float(ms[j])
        pf = float(ps[j])
        u = sf * mf
        b = _fma(u, 1.0 / pf, C51) - C51
        out[j] = (pf + 1.0) + _fma(sf, mf, -u) - _fma(pf, b, -u)
    return out


@njit(cache=True, nogil=True)
def round_div_arr(us, ps, out):
    """round_div over arrays: nearest-integer quotient estimates."""
    for j in range(us.shape[0]):
        out[j] = _fma(us[j], 1.0 / ps[j], C51) - C51
    return out


@njit(cache=True, nogil=True)
def mulmod_arr(asv, bsv, ps, out):
    """mulmod_limb over arrays, for bulk oracle comparison."""
    for j in range(asv.shape[0]):
        out[j] = mulmod_limb(asv[j], bsv[j], ps[j])
    return out


@njit(cache=True, nogil=True)
def round_quot_arr(us, ps, out):
    """Exact nearest-integer of u/p for integer-valued doubles u < 2**104.

    Decomposes u into mantissa * 2**e and builds quotient and remainder by
    repeated doubling, so the result is exact integer arithmetic with no
    reliance on any floating-point division or FMA (odd p means u/p is
    never a tie).
    """
    for j in range(us.shape[0]):
        u = us[j]
        p = ps[j]
        if u < 9007199254740992.0:  # < 2**53: representable directly
            ui = np.int64(u)
            q = ui // p
            r = ui % p
        else:
            fr, ex = math.frexp(u)
            mant = np.int64(fr * 9007199254740992.0)  # fr * 2**53, exact
            q = mant // p
            r = mant % p
            for _ in range(ex - 53):
                q = q + q
                r = r + r
                if r >= p:
                    r -= p
                    q += 1
        out[j] = q + (1 if 2 * r > p else 0)
    return out
