"""Durable residue record files in two bit-exact formats.

CSV: header line ``p,r_signed`` then one ``<p>,<r_signed>`` line per record,
decimal, LF endings only.  Packed: magic ``KREC1``, a little-endian unsigned
64-bit count, then (uint64 p, int64 r_signed) pairs.  Records are stored by
their signed residue (the table convention); the canonical form is
recomputed on read.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

from .kernels import ResidueRecord

PACKED_MAGIC = b"KREC1"
CSV_HEADER = b"p,r_signed"

RecordFormat = Literal["csv", "packed"]


class StoreFormatError(ValueError):
    """Raised for malformed record files; message carries line/offset."""


@dataclass(frozen=True)
class RecordFile:
    path: Path
    format: RecordFormat
    count: int


def _as_pairs(records: Iterable) -> list[tuple[int, int]]:
    pairs = []
    for rec in records:
        if isinstance(rec, ResidueRecord):
            pairs.append((rec.p, rec.r_signed))
        else:
            p, r = rec
            pairs.append((int(p), int(r)))
    return pairs


def _check_invariants(pairs: Sequence[tuple[int, int]], where: str) -> None:
    last_p = 0
    for n, (p, r) in enumerate(pairs):
        if p <= last_p:
            raise StoreFormatError(f"{where}: records not strictly ascending at entry {n} (p={p})")
        if abs(r) > (p - 1) // 2:
            raise StoreFormatError(f"{where}: signed residue {r} out of range at entry {n} (p={p})")
        last_p = p


def _atomic_write(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def write_records(records: Iterable, path: str | Path, format: RecordFormat = "csv") -> RecordFile:
    """Write records (ascending by p) to path in the chosen format."""
    path = Path(path)
    pairs = _as_pairs(records)
    _check_invariants(pairs, "write")
    if format == "csv":
        lines = [CSV_HEADER]
        lines.extend(b"%d,%d" % (p, r) for p, r in pairs)
        payload = b"\n".join(lines) + b"\n"
    elif format == "packed":
        out = [PACKED_MAGIC, struct.pack("<Q", len(pairs))]
        out.extend(struct.pack("<Qq", p, r) for p, r in pairs)
        payload = b"".join(out)
    else:
        raise ValueError(f"unknown record format {format!r}")
    _atomic_write(path, payload)
    return RecordFile(path=path, format=format, count=len(pairs))


def read_records(path: str | Path) -> list[ResidueRecord]:
    """Read a record file, sniffing its format, and validate invariants."""
    path = Path(path)
    blob = path.read_bytes()
    if blob.startswith(PACKED_MAGIC):
        pairs = _read_packed(blob)
    elif blob.startswith(CSV_HEADER):
        pairs = _read_csv(blob)
    else:
        raise StoreFormatError(f"{path}: unrecognized format (no KREC1 magic or CSV header)")
    _check_invariants(pairs, str(path))
    return [ResidueRecord.from_signed(p, r) for p, r in pairs]


def _read_packed(blob: bytes) -> list[tuple[int, int]]:
    head = len(PACKED_MAGIC)
    if len(blob) < head + 8:
        raise StoreFormatError(f"truncated packed file: no count at offset {head}")
    (count,) = struct.unpack_from("<Q", blob, head)
    need = head + 8 + 16 * count
    if len(blob) < need:
        raise StoreFormatError(
            f"truncated packed file: expected {need} bytes, got {len(blob)} "
            f"(failed at offset {len(blob) - (len(blob) - head - 8) % 16})"
        )
    pairs = []
    off = head + 8
    for _ in range(count):
        p, r = struct.unpack_from("<Qq", blob, off)
        pairs.append((p, r))
        off += 16
    return pairs


def _read_csv(blob: bytes) -> list[tuple[int, int]]:
    lines = blob.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    pairs = []
    for n, line in enumerate(lines[1:], start=2):
        parts = line.split(b",")
        if len(parts) != 2:
            raise StoreFormatError(f"line {n}: expected 'p,r_signed', got {line!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise StoreFormatError(f"line {n}: non-integer field in {line!r}") from None
    return pairs
