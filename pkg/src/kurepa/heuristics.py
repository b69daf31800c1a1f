"""Counterexample heuristics from the reciprocal-sum asymptotics.

Treating !p mod p as uniform on [0, p), the expected number of primes in
[a, b] hitting any fixed residue is the sum of 1/p over the interval, which
by Mertens' second theorem is asymptotically ln(ln b / ln a); the chance of
no hit is the product of (1 - 1/p), asymptotically ln a / ln b by the third
theorem.  Only these leading terms are implemented.  The constants in the
full statements are recorded here for reference but cancel in the interval
ratios:

* Euler's constant gamma = 0.5772156649...
* Mertens constant      = 0.2614972128...

with error terms O(1/ln x) that are not computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

EULER_GAMMA = 0.5772156649015329
MERTENS_CONSTANT = 0.2614972128476428

EstimateKind = Literal[
    "expected_counterexamples", "expected_small_residues", "prob_none"
]


@dataclass(frozen=True)
class HeuristicEstimate:
    """An interval estimate: endpoints, optional threshold, value, kind."""

    a: float
    b: float
    l: Optional[int]
    value: float
    kind: EstimateKind


def _check_interval(a: float, b: float) -> None:
    if not a > math.e:
        raise ValueError(f"interval start {a} must exceed e")
    if b < a:
        raise ValueError(f"interval end {b} below start {a}")


def expected_counterexamples(a: float, b: float) -> float:
    """Expected residue-zero primes in [a, b]: ln(ln b / ln a)."""
    _check_interval(a, b)
    return math.log(math.log(b) / math.log(a))


def expected_small_residues(a: float, b: float, l: int) -> float:
    """Expected primes in [a, b] with |signed residue| < l: (2l-1) ln(ln b / ln a)."""
    if l < 1:
        raise ValueError("threshold l must be >= 1")
    return (2 * l - 1) * expected_counterexamples(a, b)


def prob_no_counterexample(a: float, b: float) -> float:
    """Probability of no residue-zero prime in [a, b]: ln a / ln b."""
    _check_interval(a, b)
    return math.log(a) / math.log(b)


def estimate(kind: EstimateKind, a: float, b: float, l: Optional[int] = None) -> HeuristicEstimate:
    """Build a tagged estimate (convenience for reporting layers)."""
    if kind == "expected_counterexamples":
        value = expected_counterexamples(a, b)
    elif kind == "expected_small_residues":
        if l is None:
            raise ValueError("expected_small_residues needs a threshold l")
        value = expected_small_residues(a, b, l)
    elif kind == "prob_none":
        value = prob_no_counterexample(a, b)
    else:
        raise ValueError(f"unknown estimate kind {kind!r}")
    return HeuristicEstimate(a=a, b=b, l=l, value=value, kind=kind)
