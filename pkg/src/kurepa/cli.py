"""Command-line front end.

Subcommands: residue (single prime), scan / resume (range search), verify
(sampled re-verification of stored records), genfact (generalized-factorial
smallest-prime search), estimate (interval heuristics).

Exit codes: 0 success, 2 argument error, 3 I/O or file-format error, and 10
when a scan finds a counterexample (a prime with residue zero) - the code a
long-running campaign watches for.  Timing and throughput lines are
prefixed with ``#`` so deterministic output can be diffed by filtering them.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from . import genfact as genfact_mod
from . import heuristics, search, store
from .kernels import ALGORITHMS, ResidueRecord, residue_fast
from .modmath import Modulus
from .search import CheckpointError, ScanConfig
from .store import StoreFormatError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_COUNTEREXAMPLE = 10


def _default_workers() -> int:
    return int(os.environ.get("KUREPA_WORKERS", "1"))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kurepa",
        description="Left-factorial residues r_p = !p mod p: compute, scan, estimate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    res = sub.add_parser("residue", help="compute r_p for a single prime")
    res.add_argument("p", type=int)
    res.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="fast")
    res.add_argument("--backend", choices=["float51", "exact128"], default="float51")
    res.add_argument("--chunk", type=int, default=10000)

    sc = sub.add_parser("scan", help="scan a prime range for small residues")
    sc.add_argument("--lo", type=int, required=True)
    sc.add_argument("--hi", type=int, required=True)
    sc.add_argument("--threshold", type=int, default=100)
    sc.add_argument("--workers", type=int, default=None)
    sc.add_argument("--backend", choices=["float51", "exact128"], default="float51")
    sc.add_argument("--block-size", type=int, default=262144)
    sc.add_argument("--chunk", type=int, default=10000)
    sc.add_argument("--out", default=None, help="record file to write (CSV)")
    sc.add_argument("--checkpoint", default=None, help="checkpoint file path")
    sc.add_argument("--record-all", action="store_true", help="persist every residue")
    sc.add_argument("--pow2", action="store_true", help="treat --lo/--hi as exponents of 2")

    rs = sub.add_parser("resume", help="resume an interrupted scan")
    rs.add_argument("--checkpoint", required=True)
    rs.add_argument("--workers", type=int, default=None)

    vf = sub.add_parser("verify", help="re-verify sampled records independently")
    vf.add_argument("--records", required=True)
    vf.add_argument("--n", type=int, default=1000)
    vf.add_argument("--seed", type=int, default=0)

    gf = sub.add_parser("genfact", help="smallest prime dividing the k-th generalized sum")
    group = gf.add_mutually_exclusive_group(required=True)
    group.add_argument("--k", type=int)
    group.add_argument("--k-range", help="inclusive range A:B of exponents")
    gf.add_argument("--bound", type=int, default=genfact_mod.DEFAULT_BOUND)
    gf.add_argument("--workers", type=int, default=None)

    es = sub.add_parser("estimate", help="interval heuristics for counterexample counts")
    es.add_argument("--a", type=float, required=True)
    es.add_argument("--b", type=float, required=True)
    es.add_argument("--l", type=int, default=None)
    es.add_argument("--observed", type=int, default=None, help="observed count to print beside the estimate")
    es.add_argument("--pow2", action="store_true", help="treat --a/--b as exponents of 2")

    return parser


def _format_table(records: Sequence[ResidueRecord], columns: int = 3) -> list[str]:
    """Column-major (p, r_p) table in the residue-table layout."""
    if not records:
        return []
    rows = -(-len(records) // columns)
    cells = [[None] * columns for _ in range(rows)]
    for idx, rec in enumerate(records):
        cells[idx % rows][idx // rows] = rec
    width = max(len(str(r.p)) for r in records) + 2
    lines = [("{:>" + str(width) + "} {:>6}").format("p", "r_p") * columns]
    for row in cells:
        parts = []
        for rec in row:
            if rec is None:
                parts.append(" " * (width + 7))
            else:
                parts.append(("{:>" + str(width) + "} {:>6}").format(rec.p, rec.r_signed))
        lines.append("".join(parts).rstrip())
    return lines


def _print_summary(summary: search.ScanSummary, config: ScanConfig) -> None:
    print(f"scanned [{config.lo}, {config.hi}): {summary.primes_tested} primes")
    if summary.counterexamples:
        for p in summary.counterexamples:
            print(f"COUNTEREXAMPLE: r_p = 0 at p = {p}")
    else:
        print("counterexamples: none")
    print(f"small residues (|r_p| < {config.threshold}): {len(summary.small_residues)}")
    for line in _format_table(summary.small_residues):
        print(line)
    if config.threshold >= 1 and config.lo > 2:
        expected = heuristics.expected_small_residues(
            max(config.lo, 3), config.hi, config.threshold
        )
        print(
            f"expected by the reciprocal-sum model: {expected:.6f} "
            f"(observed {len(summary.small_residues)})"
        )
    print(f"digest {summary.digest_hex}")
    if not summary.complete:
        print(f"interrupted after {summary.blocks_completed} blocks (resumable)")
    print(f"# elapsed {summary.elapsed:.2f}s")
    print(f"# throughput {summary.iterations_per_second:.3e} iterations/s")


def _cmd_residue(args) -> int:
    mod = Modulus(args.p)
    if args.algorithm == "fast":
        rec = residue_fast(mod, backend=args.backend, chunk=args.chunk)
    else:
        rec = ALGORITHMS[args.algorithm](mod)
    print(f"r_p = {rec.r_canonical}")
    print(f"r_p signed = {rec.r_signed}")
    return EXIT_COUNTEREXAMPLE if rec.is_counterexample else EXIT_OK


def _cmd_scan(args) -> int:
    lo, hi = args.lo, args.hi
    if args.pow2:
        lo, hi = 2**lo, 2**hi
    config = ScanConfig(
        lo=lo,
        hi=hi,
        threshold=args.threshold,
        block_size=args.block_size,
        chunk=args.chunk,
        workers=args.workers if args.workers is not None else _default_workers(),
        backend=args.backend,
        checkpoint_path=args.checkpoint,
        out_path=args.out,
        record_all=True if args.record_all else None,
    )
    summary = search.scan(config)
    _print_summary(summary, config)
    return EXIT_COUNTEREXAMPLE if summary.counterexamples else EXIT_OK


def _cmd_resume(args) -> int:
    summary = search.resume(args.checkpoint, workers=args.workers)
    config = search.read_checkpoint(args.checkpoint).config
    _print_summary(summary, config)
    return EXIT_COUNTEREXAMPLE if summary.counterexamples else EXIT_OK


def _cmd_verify(args) -> int:
    report = search.verify_sample(args.records, args.n, args.seed)
    print(f"verified {report.sampled} records (seed {report.seed})")
    if report.ok:
        print("all match")
        return EXIT_OK
    for p, stored, fresh in report.mismatches:
        print(f"MISMATCH at p = {p}: stored {stored}, recomputed {fresh}")
    return 1


def _cmd_genfact(args) -> int:
    if args.k is not None:
        ks = [args.k]
    else:
        try:
            a, b = args.k_range.split(":")
            ks = list(range(int(a), int(b) + 1))
        except ValueError:
            raise ValueError(f"--k-range expects A:B, got {args.k_range!r}") from None
    workers = args.workers if args.workers is not None else _default_workers()
    for k in ks:
        result = genfact_mod.smallest_divisor_prime(k, args.bound, workers=workers)
        if result.p is not None:
            tag = " (minimal)" if result.minimal else ""
            print(f"k={result.k} p={result.p}{tag}")
        else:
            print(f"k={result.k} p=none below {result.bound}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    a, b = args.a, args.b
    if args.pow2:
        a, b = 2.0**a, 2.0**b
    if args.l is not None:
        value = heuristics.expected_small_residues(a, b, args.l)
        line = f"expected primes with |r_p| < {args.l} in [{a:g}, {b:g}]: {value:.6f}"
        if args.observed is not None:
            line += f" (observed {args.observed})"
        print(line)
    else:
        exp = heuristics.expected_counterexamples(a, b)
        prob = heuristics.prob_no_counterexample(a, b)
        print(f"expected counterexamples in [{a:g}, {b:g}]: {exp:.6f}")
        print(f"probability of none: {prob:.6f}")
    return EXIT_OK


_COMMANDS = {
    "residue": _cmd_residue,
    "scan": _cmd_scan,
    "resume": _cmd_resume,
    "verify": _cmd_verify,
    "genfact": _cmd_genfact,
    "estimate": _cmd_estimate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, StoreFormatError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
