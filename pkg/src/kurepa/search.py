"""Parallel range scanning for left-factorial counterexamples.

A coordinator feeds prime blocks to a worker pool, merges results strictly
in block order (so digests and checkpoints are deterministic for a given
range regardless of worker count), flags small signed residues, and records
any residue-zero prime as a counterexample.  Progress is checkpointed after
each completed prefix block and can be resumed bit-identically.

The checkpoint is a small text file: magic line ``KSCAN1``, ``key=value``
config and progress lines, then three bare lines with the next block
ordinal, the completed block count, and the rolling digest as fixed-width
hexadecimal.  Writes are atomic (temp file + rename).  Residues found so
far live in a sidecar record file next to the checkpoint (or at the
configured output path), rewritten atomically at each checkpoint.
"""

from __future__ import annotations

import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels, store
from .kernels import Backend, ResidueRecord
from .modmath import FLOAT51_PRIME_LIMIT, Modulus
from .sieve import blocks_of

CHECKPOINT_MAGIC = "KSCAN1"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_M64 = (1 << 64) - 1


class CheckpointError(RuntimeError):
    """Corrupt, incomplete, or mismatched checkpoint state."""


def digest_update(digest: int, p: int, r_canonical: int) -> int:
    """Fold one (p, r) pair into the rolling FNV-1a digest.

    Pairs are absorbed as their little-endian 8-byte encodings, in prime
    order; the digest of a range prefix is therefore reproducible by any
    scan of the same range.
    """
    for byte in p.to_bytes(8, "little") + r_canonical.to_bytes(8, "little"):
        digest = ((digest ^ byte) * _FNV_PRIME) & _M64
    return digest


@dataclass(frozen=True)
class ScanConfig:
    """Parameters of a range scan; the result-affecting fields are identity.

    record_all=None resolves to True only for small ranges (hi <= 1e8):
    persisting every residue of a large range is an explicit opt-in.
    """

    lo: int
    hi: int
    threshold: int = 100
    block_size: int = 262144
    chunk: int = kernels.DEFAULT_CHUNK
    workers: int = 1
    backend: Backend = "float51"
    checkpoint_path: Optional[str] = None
    out_path: Optional[str] = None
    record_all: Optional[bool] = None

    def __post_init__(self) -> None:
        if self.lo >= self.hi:
            raise ValueError(f"empty range [{self.lo}, {self.hi})")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.block_size < 1 or self.chunk < 1:
            raise ValueError("block_size and chunk must be >= 1")
        if self.backend == "float51" and self.hi > FLOAT51_PRIME_LIMIT:
            raise ValueError(
                f"hi={self.hi} exceeds 2**34: the float51 backend cannot "
                "scan it, use backend='exact128'"
            )

    @property
    def effective_record_all(self) -> bool:
        return self.record_all if self.record_all is not None else self.hi <= 10**8

    def identity(self) -> tuple:
        """Fields that must match for a checkpoint to belong to this scan."""
        return (
            self.lo, self.hi, self.threshold, self.block_size, self.chunk,
            self.backend, self.effective_record_all,
        )


@dataclass(frozen=True)
class ScanCheckpoint:
    """Durable progress marker: config echo plus prefix position and digest."""

    config: ScanConfig
    next_block_index: int
    completed: int
    digest: int
    primes_tested: int = 0
    iterations: int = 0
    counterexamples: tuple = ()


@dataclass
class ScanSummary:
    """Merged outcome of a scan over [lo, hi)."""

    primes_tested: int
    counterexamples: list[int]
    small_residues: list[ResidueRecord]
    elapsed: float
    iterations_per_second: float
    digest: int
    complete: bool
    blocks_completed: int
    records: list[ResidueRecord] = field(default_factory=list, repr=False)

    @property
    def digest_hex(self) -> str:
        return f"{self.digest:016x}"


def _records_path(config: ScanConfig) -> Optional[Path]:
    if config.out_path:
        return Path(config.out_path)
    if config.checkpoint_path:
        return Path(str(config.checkpoint_path) + ".records.csv")
    return None


def _write_checkpoint(cp: ScanCheckpoint) -> None:
    cfg = cp.config
    path = Path(cfg.checkpoint_path)
    lines = [
        CHECKPOINT_MAGIC,
        f"lo={cfg.lo}",
        f"hi={cfg.hi}",
        f"threshold={cfg.threshold}",
        f"block_size={cfg.block_size}",
        f"chunk={cfg.chunk}",
        f"backend={cfg.backend}",
        f"record_all={int(cfg.effective_record_all)}",
        f"out={cfg.out_path or ''}",
        f"primes_tested={cp.primes_tested}",
        f"iterations={cp.iterations}",
        "counterexamples=" + ",".join(str(p) for p in cp.counterexamples),
        str(cp.next_block_index),
        str(cp.completed),
        f"{cp.digest:016x}",
    ]
    payload = ("\n".join(lines) + "\n").encode()
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def read_checkpoint(path: str | Path) -> ScanCheckpoint:
    """Parse and validate a checkpoint file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: missing {CHECKPOINT_MAGIC} magic")
    if len(lines) < 4:
        raise CheckpointError(f"{path}: truncated checkpoint")
    fields = {}
    for line in lines[1:-3]:
        key, sep, value = line.partition("=")
        if not sep:
            raise CheckpointError(f"{path}: malformed header line {line!r}")
        fields[key] = value
    try:
        config = ScanConfig(
            lo=int(fields["lo"]),
            hi=int(fields["hi"]),
            threshold=int(fields["threshold"]),
            block_size=int(fields["block_size"]),
            chunk=int(fields["chunk"]),
            backend=fields["backend"],  # type: ignore[arg-type]
            checkpoint_path=str(path),
            out_path=fields.get("out") or None,
            record_all=bool(int(fields["record_all"])),
        )
        counterexamples = tuple(
            int(x) for x in fields.get("counterexamples", "").split(",") if x
        )
        cp = ScanCheckpoint(
            config=config,
            next_block_index=int(lines[-3]),
            completed=int(lines[-2]),
            digest=int(lines[-1], 16),
            primes_tested=int(fields.get("primes_tested", 0)),
            iterations=int(fields.get("iterations", 0)),
            counterexamples=counterexamples,
        )
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed checkpoint: {exc}") from exc
    if len(lines[-1]) != 16:
        raise CheckpointError(f"{path}: digest must be 16 hex digits")
    if cp.completed != cp.next_block_index:
        raise CheckpointError(f"{path}: inconsistent prefix counters")
    return cp


class _Progress:
    """Mutable merge state shared by scan and resume."""

    def __init__(self, config: ScanConfig):
        self.config = config
        self.digest = _FNV_OFFSET
        self.primes_tested = 0
        self.iterations = 0
        self.counterexamples: list[int] = []
        self.small: list[ResidueRecord] = []
        self.all_records: list[ResidueRecord] = []
        self.blocks_done = 0

    def merge_block(self, ps: np.ndarray, rs: np.ndarray) -> None:
        cfg = self.config
        digest = self.digest
        for p, r in zip(ps.tolist(), rs.tolist()):
            digest = digest_update(digest, p, r)
        self.digest = digest
        self.primes_tested += int(ps.size)
        self.iterations += int(((ps - 3) // 2).sum())
        half = (ps - 1) // 2
        signed = np.where(rs <= half, rs, rs - ps)
        for j in np.flatnonzero(rs == 0).tolist():
            self.counterexamples.append(int(ps[j]))
        hits = np.flatnonzero(np.abs(signed) < cfg.threshold)
        for j in hits.tolist():
            self.small.append(ResidueRecord(int(ps[j]), int(rs[j]), int(signed[j])))
        if cfg.effective_record_all:
            self.all_records.extend(
                ResidueRecord(int(p), int(r), int(sr))
                for p, r, sr in zip(ps.tolist(), rs.tolist(), signed.tolist())
            )
        self.blocks_done += 1

    def persisted_records(self) -> list[ResidueRecord]:
        return self.all_records if self.config.effective_record_all else self.small

    def restore(self, cp: ScanCheckpoint) -> None:
        self.digest = cp.digest
        self.primes_tested = cp.primes_tested
        self.iterations = cp.iterations
        self.counterexamples = list(cp.counterexamples)
        self.blocks_done = cp.completed
        rpath = _records_path(self.config)
        if rpath is not None and (cp.primes_tested or cp.completed):
            if not rpath.exists():
                raise CheckpointError(f"records sidecar {rpath} is missing")
            recs = store.read_records(rpath)
        else:
            recs = []
        if self.config.effective_record_all:
            self.all_records = recs
            self.small = [
                r for r in recs if abs(r.r_signed) < self.config.threshold
            ]
        else:
            self.small = recs

    def checkpoint(self, next_block_index: int) -> None:
        cfg = self.config
        rpath = _records_path(cfg)
        if rpath is not None:
            store.write_records(self.persisted_records(), rpath, "csv")
        if cfg.checkpoint_path:
            _write_checkpoint(
                ScanCheckpoint(
                    config=cfg,
                    next_block_index=next_block_index,
                    completed=next_block_index,
                    digest=self.digest,
                    primes_tested=self.primes_tested,
                    iterations=self.iterations,
                    counterexamples=tuple(self.counterexamples),
                )
            )

    def summary(self, elapsed: float, complete: bool, run_iterations: int) -> ScanSummary:
        rate = run_iterations / elapsed if elapsed > 0 else 0.0
        return ScanSummary(
            primes_tested=self.primes_tested,
            counterexamples=list(self.counterexamples),
            small_residues=list(self.small),
            elapsed=elapsed,
            iterations_per_second=rate,
            digest=self.digest,
            complete=complete,
            blocks_completed=self.blocks_done,
            records=self.persisted_records(),
        )


def _compute_block(ps: np.ndarray, backend: Backend, chunk: int) -> np.ndarray:
    # routed through the module attribute so tests can stub the kernel
    return kernels.residue_fast_batch(ps, backend, chunk)


def _run(
    progress: _Progress,
    start_block: int,
    max_blocks: Optional[int] = None,
) -> ScanSummary:
    cfg = progress.config
    t0 = time.perf_counter()
    iter0 = progress.iterations
    budget = max_blocks if max_blocks is not None else None
    complete = True
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        pending = []
        ordinal = 0
        stream = blocks_of(cfg.lo, cfg.hi, cfg.block_size)
        exhausted = False
        while True:
            while not exhausted and len(pending) < cfg.workers + 2:
                block = next(stream, None)
                if block is None:
                    exhausted = True
                    break
                if ordinal >= start_block and (budget is None or budget > 0):
                    ps = block.primes[block.primes >= 3]
                    pending.append((pool.submit(_compute_block, ps, cfg.backend, cfg.chunk), ps))
                    if budget is not None:
                        budget -= 1
                elif ordinal >= start_block:
                    complete = False
                    exhausted = True
                ordinal += 1
            if not pending:
                break
            fut, ps = pending.pop(0)
            rs = fut.result()
            progress.merge_block(ps, np.asarray(rs, dtype=np.int64))
            progress.checkpoint(progress.blocks_done)
    elapsed = time.perf_counter() - t0
    return progress.summary(elapsed, complete, progress.iterations - iter0)


def scan(config: ScanConfig, max_blocks: Optional[int] = None) -> ScanSummary:
    """Compute residues for every odd prime in [lo, hi).

    Results merge in ascending-prime order whatever the completion order, so
    two scans of the same range produce identical digests and records for
    any worker count.  ``max_blocks`` bounds the number of blocks processed
    (an operational/testing hook for forced interruption); the returned
    summary then has complete=False and the checkpoint, if configured, is
    resumable.
    """
    progress = _Progress(config)
    return _run(progress, start_block=0, max_blocks=max_blocks)


def resume(
    checkpoint_path: str | Path,
    config: Optional[ScanConfig] = None,
    workers: Optional[int] = None,
) -> ScanSummary:
    """Continue an interrupted scan from its checkpoint.

    The stored config is authoritative; a caller-supplied config must agree
    on every result-affecting field.  A finished checkpoint returns its
    summary immediately with no new kernel work.
    """
    cp = read_checkpoint(checkpoint_path)
    stored = cp.config
    if config is not None and config.identity() != stored.identity():
        raise CheckpointError(
            f"{checkpoint_path}: config does not match the stored scan "
            f"(stored {stored.identity()}, requested {config.identity()})"
        )
    if workers is not None:
        stored = replace(stored, workers=workers)
    elif config is not None:
        stored = replace(stored, workers=config.workers)
    progress = _Progress(stored)
    progress.restore(cp)
    return _run(progress, start_block=cp.next_block_index)


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of re-deriving a sample of stored residues independently."""

    sampled: int
    requested: int
    seed: int
    mismatches: tuple

    @property
    def ok(self) -> bool:
        return not self.mismatches


def verify_sample(
    records: str | Path | Sequence[ResidueRecord],
    n: int,
    seed: int = 0,
) -> VerificationReport:
    """Recompute n uniformly sampled records with an independent algorithm.

    Each sampled prime is rerun through the alternating-sign recurrence on
    the exact integer backend; any disagreement with the stored residue is
    reported.  Asking for more samples than records verifies everything
    once (no resampling).
    """
    if isinstance(records, (str, Path)):
        recs: Sequence[ResidueRecord] = store.read_records(records)
    else:
        recs = list(records)
    take = min(n, len(recs))
    rng = random.Random(seed)
    chosen = rng.sample(range(len(recs)), take) if take else []
    mismatches = []
    for idx in sorted(chosen):
        rec = recs[idx]
        fresh = kernels.residue_rec_b(Modulus(rec.p))
        if fresh.r_canonical != rec.r_canonical:
            mismatches.append((rec.p, rec.r_canonical, fresh.r_canonical))
    return VerificationReport(
        sampled=take, requested=n, seed=seed, mismatches=tuple(mismatches)
    )
