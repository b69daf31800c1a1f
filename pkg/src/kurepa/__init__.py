"""Left-factorial residues r_p = !p mod p and the search for a prime with r_p = 0.

The library computes residues with several independent algorithms, scans
prime ranges in parallel with deterministic checkpointable progress, handles
generalized factorial sums (k-th powers of factorials), and evaluates the
reciprocal-sum heuristics for how rare counterexamples should be.
"""

from .genfact import GenFactResult, genfact_residue, shortcut_prime, smallest_divisor_prime
from .heuristics import (
    HeuristicEstimate,
    expected_counterexamples,
    expected_small_residues,
    prob_no_counterexample,
)
from .kernels import (
    KernelState,
    ResidueRecord,
    residue_fast,
    residue_fast_batch,
    residue_naive,
    residue_rec_a,
    residue_rec_b,
    residue_rec_cd,
    step_chunk,
)
from .modmath import Float51Constants, Modulus, fma, mulmod_ref, powmod, round_div, fma_mulmod_offset
from .search import ScanConfig, ScanSummary, resume, scan, verify_sample
from .sieve import PrimeBlock, blocks_of, primes_in
from .store import read_records, write_records

__version__ = "0.1.0"

__all__ = [
    "Float51Constants",
    "GenFactResult",
    "HeuristicEstimate",
    "KernelState",
    "Modulus",
    "PrimeBlock",
    "ResidueRecord",
    "ScanConfig",
    "ScanSummary",
    "blocks_of",
    "expected_counterexamples",
    "expected_small_residues",
    "fma",
    "fma_mulmod_offset",
    "genfact_residue",
    "mulmod_ref",
    "powmod",
    "prob_no_counterexample",
    "primes_in",
    "read_records",
    "residue_fast",
    "residue_fast_batch",
    "residue_naive",
    "residue_rec_a",
    "residue_rec_b",
    "residue_rec_cd",
    "resume",
    "scan",
    "shortcut_prime",
    "smallest_divisor_prime",
    "step_chunk",
    "verify_sample",
    "write_records",
]
