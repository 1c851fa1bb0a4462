"""Embedded ordered store with the exploded four-table layout.

The engine is a small log-structured store: writes go to a write-ahead
log and an in-memory table; snapshots freeze that table, and frozen runs
are flushed into immutable sorted segment files (magic header "LMG1").
Reads merge all runs newest-first, so the scan contract matches a big
sorted (table, row, col) -> value map with last-write-wins.

On top of it, TableSet explodes each record into presence cells:

    edge     row = record id,    col = "field|value",  val = "1"
    edge_t   transpose of edge (col-indexed scans)
    degree   row = "field|value", col = "degree", val = decimal count
    text     row = record id, cols "text", "meta|ts", "meta|user"

Indexed fields are time (UTC minute), user, latlon (interleaved key) and
word (one col per distinct token of the text).
"""

from __future__ import annotations

import bisect
import contextlib
import heapq
import json
import os
import struct
import threading
import unicodedata
import zlib
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

from cityglow.geokey import DEFAULT_FORMAT, GeoKeyFormat, encode_latlon
from cityglow.ingest import TweetRecord, escape_field, from_tsv

MAGIC = b"LMG1"
FORMAT_VERSION = 1

TABLE_EDGE = "edge"
TABLE_EDGE_T = "edge_t"
TABLE_DEGREE = "degree"
TABLE_TEXT = "text"
TABLES = (TABLE_EDGE, TABLE_EDGE_T, TABLE_DEGREE, TABLE_TEXT)

_OP_SET = 0
_OP_DEL = 1

_WAL_NAME = "wal"
_META_NAME = "meta.json"


class StoreError(RuntimeError):
    """IO or corruption failure in the embedded store."""


class StoreIntegrityError(StoreError):
    """A table invariant does not hold (e.g. missing text for an id)."""


class Cell(NamedTuple):
    row: str
    col: str
    val: str


def tokenize(text: str) -> list[str]:
    """Lowercased tokens split on Unicode whitespace and punctuation.

    Keyword search and the word| columns must use this same function.
    """
    tokens: list[str] = []
    cur: list[str] = []
    for ch in text.lower():
        if ch.isspace() or unicodedata.category(ch).startswith("P"):
            if cur:
                tokens.append("".join(cur))
                cur = []
        else:
            cur.append(ch)
    if cur:
        tokens.append("".join(cur))
    return tokens


def token_set(text: str) -> set[str]:
    return set(tokenize(text))


def minute_utc(ts: int) -> str:
    """Epoch seconds -> ISO-8601 UTC truncated to the minute."""
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%MZ")


# ---------------------------------------------------------------------------
# Entry encoding shared by the WAL and segment files.
# ---------------------------------------------------------------------------


def _encode_entry(op: int, table: str, row: str, col: str, val: str) -> bytes:
    parts = [struct.pack("<B", op)]
    for s in (table, row, col, val):
        b = s.encode("utf-8")
        parts.append(struct.pack("<I", len(b)))
        parts.append(b)
    return b"".join(parts)


def _decode_entry(buf: bytes, offset: int = 0) -> tuple[int, str, str, str, str, int]:
    (op,) = struct.unpack_from("<B", buf, offset)
    offset += 1
    fields = []
    for _ in range(4):
        (n,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        fields.append(buf[offset : offset + n].decode("utf-8"))
        offset += n
    table, row, col, val = fields
    return op, table, row, col, val, offset


# ---------------------------------------------------------------------------
# Runs: in-memory tables and on-disk segments.
# ---------------------------------------------------------------------------


class _MemRun:
    """Mutable nested cell map; becomes immutable once frozen."""

    def __init__(self) -> None:
        self.tables: dict[str, dict[str, dict[str, tuple[int, str]]]] = {}
        self.count = 0
        self._sorted: dict[str, tuple[list, list]] = {}

    def put(self, table: str, row: str, col: str, op: int, val: str) -> None:
        cells = self.tables.setdefault(table, {}).setdefault(row, {})
        if col not in cells:
            self.count += 1
        cells[col] = (op, val)
        self._sorted.pop(table, None)

    def get(self, table: str, row: str, col: str):
        return self.tables.get(table, {}).get(row, {}).get(col)

    def row_cells(self, table: str, row: str):
        return self.tables.get(table, {}).get(row, {}).items()

    def sorted_table(self, table: str) -> tuple[list, list]:
        cached = self._sorted.get(table)
        if cached is not None:
            return cached
        keys: list[tuple[str, str]] = []
        vals: list[tuple[int, str]] = []
        for row in sorted(self.tables.get(table, {})):
            cells = self.tables[table][row]
            for col in sorted(cells):
                keys.append((row, col))
                vals.append(cells[col])
        self._sorted[table] = (keys, vals)
        return keys, vals


class _Segment:
    """Immutable sorted run backed by one segment file."""

    def __init__(self, path: Path):
        self.path = path
        self.tables: dict[str, tuple[list, list]] = {}
        data = path.read_bytes()
        if data[:4] != MAGIC:
            raise StoreError(f"{path}: bad segment magic {data[:4]!r}")
        (version,) = struct.unpack_from("<I", data, 4)
        if version != FORMAT_VERSION:
            raise StoreError(f"{path}: unsupported segment version {version}")
        (n,) = struct.unpack_from("<Q", data, 8)
        offset = 16
        for _ in range(n):
            op, table, row, col, val, offset = _decode_entry(data, offset)
            keys, vals = self.tables.setdefault(table, ([], []))
            keys.append((row, col))
            vals.append((op, val))

    def get(self, table: str, row: str, col: str):
        entry = self.tables.get(table)
        if entry is None:
            return None
        keys, vals = entry
        i = bisect.bisect_left(keys, (row, col))
        if i < len(keys) and keys[i] == (row, col):
            return vals[i]
        return None

    def row_cells(self, table: str, row: str):
        entry = self.tables.get(table)
        if entry is None:
            return
        keys, vals = entry
        i = bisect.bisect_left(keys, (row, ""))
        while i < len(keys) and keys[i][0] == row:
            yield keys[i][1], vals[i]
            i += 1

    def sorted_table(self, table: str) -> tuple[list, list]:
        return self.tables.get(table, ([], []))


def _write_segment(path: Path, entries: Iterable[tuple[tuple[str, str, str], int, str]]) -> int:
    """Write sorted ((table,row,col), op, val) entries; returns the count."""
    tmp = path.with_suffix(".tmp")
    count = 0
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", 0))  # patched below
        for (table, row, col), op, val in entries:
            fh.write(_encode_entry(op, table, row, col, val))
            count += 1
        fh.seek(8)
        fh.write(struct.pack("<Q", count))
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return count


def _merge_sorted_runs(slices: list[tuple[list, list, int, int]]):
    """K-way merge of (keys, vals, lo, hi) slices, newest run first.

    Yields ((row, col), op, val) once per key, taking the newest run's
    entry; tombstones are passed through, not dropped.
    """
    heap: list[tuple[tuple[str, str], int, int]] = []
    for ri, (keys, _vals, lo, hi) in enumerate(slices):
        if lo < hi:
            heap.append((keys[lo], ri, lo))
    heapq.heapify(heap)
    prev_key = None
    while heap:
        key, ri, pos = heapq.heappop(heap)
        keys, vals, _lo, hi = slices[ri]
        if pos + 1 < hi:
            heapq.heappush(heap, (keys[pos + 1], ri, pos + 1))
        if key == prev_key:
            continue
        prev_key = key
        op, val = vals[pos]
        yield key, op, val


class Snapshot:
    """Frozen view of the store; never observes later writes."""

    def __init__(self, runs: list):
        self._runs = runs  # newest first, all immutable

    def _slices(self, table: str, start: str | None, end: str | None):
        slices = []
        for run in self._runs:
            keys, vals = run.sorted_table(table)
            lo = 0 if start is None else bisect.bisect_left(keys, (start, ""))
            hi = len(keys) if end is None else bisect.bisect_left(keys, (end + "\x00", ""))
            slices.append((keys, vals, lo, hi))
        return slices

    def scan(self, table: str, start: str | None = None, end: str | None = None) -> Iterator[Cell]:
        """Cells with start <= row <= end in ascending (row, col) order."""
        for (row, col), op, val in _merge_sorted_runs(self._slices(table, start, end)):
            if op == _OP_SET:
                yield Cell(row, col, val)

    def row(self, table: str, row: str) -> dict[str, str]:
        merged: dict[str, tuple[int, str]] = {}
        for run in reversed(self._runs):  # oldest first; newer overwrite
            for col, entry in run.row_cells(table, row):
                merged[col] = entry
        return {col: val for col, (op, val) in merged.items() if op == _OP_SET}

    def get(self, table: str, row: str, col: str) -> str | None:
        for run in self._runs:
            entry = run.get(table, row, col)
            if entry is not None:
                op, val = entry
                return val if op == _OP_SET else None
        return None

    def count(self, table: str) -> int:
        return sum(1 for _ in self.scan(table))


class SortedStore:
    """Ordered (table, row, col) -> value store in one directory.

    Single writer at a time (all writes serialized by an internal lock);
    any number of readers, each on an isolated snapshot.
    """

    def __init__(self, path: str | Path, flush_threshold: int = 200_000):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.flush_threshold = flush_threshold
        self._lock = threading.RLock()
        self._active = _MemRun()
        self._frozen: list[_MemRun] = []  # oldest first
        self._segments: list[_Segment] = []  # oldest first
        self._mutations = 0
        self._wal_defer = 0
        self._closed = False

        for seg_path in sorted(self.path.glob("*.seg")):
            self._segments.append(_Segment(seg_path))
        self._wal_path = self.path / _WAL_NAME
        self._replay_wal()
        self._wal = open(self._wal_path, "ab")
        if self._wal.tell() == 0:
            self._wal.write(MAGIC + struct.pack("<I", FORMAT_VERSION))
            self._wal.flush()

    # -- write path --------------------------------------------------------

    def put(self, table: str, row: str, col: str, val: str) -> None:
        self._write(_OP_SET, table, row, col, val)

    def delete(self, table: str, row: str, col: str) -> None:
        self._write(_OP_DEL, table, row, col, "")

    def _write(self, op: int, table: str, row: str, col: str, val: str) -> None:
        if not row or not col:
            raise ValueError("row and col must be non-empty")
        if any(c in row for c in "\t\n\r") or any(c in col for c in "\t\n\r"):
            raise ValueError("row and col must not contain tabs or newlines")
        with self._lock:
            self._check_open()
            payload = _encode_entry(op, table, row, col, val)
            self._wal.write(struct.pack("<I", len(payload)))
            self._wal.write(struct.pack("<I", zlib.crc32(payload)))
            self._wal.write(payload)
            if not self._wal_defer:
                self._wal.flush()
            self._active.put(table, row, col, op, val)
            self._mutations += 1
            if self._active.count >= self.flush_threshold:
                self.flush()

    @contextlib.contextmanager
    def locked(self):
        """Hold the write lock across a multi-cell update, batching WAL IO."""
        with self._lock:
            self._wal_defer += 1
            try:
                yield self
            finally:
                self._wal_defer -= 1
                if not self._wal_defer and not self._closed:
                    self._wal.flush()

    # -- read path ---------------------------------------------------------

    def _runs_newest_first(self) -> list:
        return [self._active, *reversed(self._frozen), *reversed(self._segments)]

    def get(self, table: str, row: str, col: str) -> str | None:
        with self._lock:
            for run in self._runs_newest_first():
                entry = run.get(table, row, col)
                if entry is not None:
                    op, val = entry
                    return val if op == _OP_SET else None
            return None

    def read_row(self, table: str, row: str) -> dict[str, str]:
        """Current cells of one row, including unflushed writes."""
        with self._lock:
            merged: dict[str, tuple[int, str]] = {}
            for run in reversed(self._runs_newest_first()):
                for col, entry in run.row_cells(table, row):
                    merged[col] = entry
            return {col: val for col, (op, val) in merged.items() if op == _OP_SET}

    def snapshot(self) -> Snapshot:
        with self._lock:
            self._check_open()
            if self._active.count:
                self._frozen.append(self._active)
                self._active = _MemRun()
            if len(self._frozen) >= 32:
                # alternating write/scan workloads would otherwise pile up
                # tiny runs and turn every scan into a wide merge
                self.flush()
            return Snapshot([*reversed(self._frozen), *reversed(self._segments)])

    @property
    def mutation_count(self) -> int:
        return self._mutations

    @property
    def segment_count(self) -> int:
        return len(self._segments)

    # -- maintenance -------------------------------------------------------

    def _next_segment_path(self) -> Path:
        numbers = [int(s.path.stem) for s in self._segments]
        return self.path / f"{(max(numbers) + 1 if numbers else 1):06d}.seg"

    def flush(self) -> None:
        """Persist all in-memory runs as one segment and reset the WAL."""
        with self._lock:
            self._check_open()
            if self._active.count:
                self._frozen.append(self._active)
                self._active = _MemRun()
            if not self._frozen:
                return
            runs = list(reversed(self._frozen))  # newest first
            tables = sorted({t for run in runs for t in run.tables})
            path = self._next_segment_path()

            def entries():
                for table in tables:
                    slices = []
                    for run in runs:
                        keys, vals = run.sorted_table(table)
                        slices.append((keys, vals, 0, len(keys)))
                    for (row, col), op, val in _merge_sorted_runs(slices):
                        yield (table, row, col), op, val

            _write_segment(path, entries())
            self._segments.append(_Segment(path))
            self._frozen.clear()
            self._reset_wal()

    def compact(self) -> None:
        """Merge every run into a single segment, dropping tombstones."""
        with self._lock:
            self.flush()
            if not self._segments:
                return
            old = self._segments
            tables = sorted({t for seg in old for t in seg.tables})
            path = self._next_segment_path()

            def entries():
                for table in tables:
                    slices = []
                    for seg in reversed(old):  # newest first
                        keys, vals = seg.sorted_table(table)
                        slices.append((keys, vals, 0, len(keys)))
                    for (row, col), op, val in _merge_sorted_runs(slices):
                        if op == _OP_SET:
                            yield (table, row, col), op, val

            _write_segment(path, entries())
            self._segments = [_Segment(path)]
            for seg in old:
                seg.path.unlink(missing_ok=True)

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self.flush()
            self._closed = True
            self._wal.close()

    def _check_open(self) -> None:
        if self._closed:
            raise StoreError("store is closed")

    def _reset_wal(self) -> None:
        self._wal.truncate(0)
        self._wal.seek(0)
        self._wal.write(MAGIC + struct.pack("<I", FORMAT_VERSION))
        self._wal.flush()
        os.fsync(self._wal.fileno())

    def _replay_wal(self) -> None:
        if not self._wal_path.exists():
            return
        data = self._wal_path.read_bytes()
        if not data:
            return
        if data[:4] != MAGIC:
            raise StoreError(f"{self._wal_path}: bad WAL magic")
        offset = 8
        while offset + 8 <= len(data):
            length, crc = struct.unpack_from("<II", data, offset)
            payload = data[offset + 8 : offset + 8 + length]
            if len(payload) < length or zlib.crc32(payload) != crc:
                break  # torn tail; everything before it is intact
            op, table, row, col, val, _ = _decode_entry(payload)
            self._active.put(table, row, col, op, val)
            offset += 8 + length


# ---------------------------------------------------------------------------
# The four-table record schema.
# ---------------------------------------------------------------------------


class TableSnapshot:
    """Consistent read view over all four tables."""

    def __init__(self, snap: Snapshot, fmt: GeoKeyFormat):
        self._snap = snap
        self.fmt = fmt

    def scan_range(self, table: str, start: str, end: str) -> Iterator[Cell]:
        return self._snap.scan(table, start, end)

    def scan_all(self, table: str) -> Iterator[Cell]:
        return self._snap.scan(table)

    def get_text(self, rec_id: str) -> str | None:
        return self._snap.get(TABLE_TEXT, rec_id, "text")

    def record_meta(self, rec_id: str) -> tuple[str, int, str]:
        """(user, ts, text) for a stored id; integrity error if absent."""
        cells = self._snap.row(TABLE_TEXT, rec_id)
        text = cells.get("text")
        raw_ts = cells.get("meta|ts")
        user = cells.get("meta|user")
        if text is None or raw_ts is None or user is None:
            raise StoreIntegrityError(f"record {rec_id!r} has no text sidecar")
        return user, int(raw_ts), text


@dataclass
class StoreStats:
    records: int
    cells: dict[str, int]
    segments: int

    def as_dict(self) -> dict:
        return {"records": self.records, "cells": dict(self.cells), "segments": self.segments}


class TableSet:
    """Exploded-schema view over a SortedStore.

    The key format is table metadata: it is persisted next to the data
    and mixing formats in one store is an error.
    """

    def __init__(self, store: SortedStore, fmt: GeoKeyFormat | None = None):
        self._store = store
        meta_path = store.path / _META_NAME
        if meta_path.exists():
            meta = json.loads(meta_path.read_text())
            stored = GeoKeyFormat(meta["int_digits"], meta["frac_digits"])
            if fmt is not None and fmt != stored:
                raise StoreError(
                    f"store at {store.path} uses key format {stored}, not {fmt}"
                )
            self.fmt = stored
        else:
            self.fmt = fmt or DEFAULT_FORMAT
            meta_path.write_text(
                json.dumps({"int_digits": self.fmt.int_digits, "frac_digits": self.fmt.frac_digits})
            )

    @classmethod
    def open(cls, path: str | Path, fmt: GeoKeyFormat | None = None, **kwargs) -> "TableSet":
        return cls(SortedStore(path, **kwargs), fmt=fmt)

    @property
    def store(self) -> SortedStore:
        return self._store

    # -- write path --------------------------------------------------------

    def record_cols(self, rec: TweetRecord) -> set[str]:
        """The edge columns a record explodes into."""
        cols = {
            f"time|{minute_utc(rec.ts)}",
            f"user|{escape_field(rec.user)}",
            f"latlon|{encode_latlon(rec.lat, rec.lon, self.fmt)}",
        }
        cols.update(f"word|{w}" for w in token_set(rec.text))
        return cols

    def put_record(self, rec: TweetRecord) -> None:
        """Insert or replace one record (last write wins on the id)."""
        new_cols = self.record_cols(rec)
        with self._store.locked() as store:
            old_cols = set(store.read_row(TABLE_EDGE, rec.id))
            for col in old_cols - new_cols:
                store.delete(TABLE_EDGE, rec.id, col)
                store.delete(TABLE_EDGE_T, col, rec.id)
                self._bump_degree(col, -1)
            for col in new_cols - old_cols:
                store.put(TABLE_EDGE, rec.id, col, "1")
                store.put(TABLE_EDGE_T, col, rec.id, "1")
                self._bump_degree(col, +1)
            store.put(TABLE_TEXT, rec.id, "text", rec.text)
            store.put(TABLE_TEXT, rec.id, "meta|ts", str(rec.ts))
            store.put(TABLE_TEXT, rec.id, "meta|user", rec.user)

    def _bump_degree(self, col: str, delta: int) -> None:
        current = self._store.get(TABLE_DEGREE, col, "degree")
        count = (int(current) if current is not None else 0) + delta
        if count > 0:
            self._store.put(TABLE_DEGREE, col, "degree", str(count))
        else:
            self._store.delete(TABLE_DEGREE, col, "degree")

    def load_tsv(self, lines: Iterable[str]) -> int:
        """Bulk-load archival TSV lines; returns the record count."""
        n = 0
        for line in lines:
            if not line.strip():
                continue
            self.put_record(from_tsv(line))
            n += 1
        return n

    # -- read path ---------------------------------------------------------

    def snapshot(self) -> TableSnapshot:
        return TableSnapshot(self._store.snapshot(), self.fmt)

    def scan_range(self, table: str, start: str, end: str) -> Iterator[Cell]:
        return self.snapshot().scan_range(table, start, end)

    def scan_all(self, table: str) -> Iterator[Cell]:
        return self.snapshot().scan_all(table)

    def get_text(self, rec_id: str) -> str | None:
        return self.snapshot().get_text(rec_id)

    def record_ids(self) -> list[str]:
        snap = self.snapshot()
        return [cell.row for cell in snap.scan_all(TABLE_TEXT) if cell.col == "text"]

    def stats(self) -> StoreStats:
        snap = self.snapshot()
        cells = {table: snap._snap.count(table) for table in TABLES}
        records = sum(1 for c in snap.scan_all(TABLE_TEXT) if c.col == "text")
        return StoreStats(records=records, cells=cells, segments=self._store.segment_count)

    # -- maintenance -------------------------------------------------------

    def rebuild_degrees(self) -> None:
        """Recompute the degree table from edge, fixing any drift."""
        with self._store.locked() as store:
            snap = store.snapshot()
            counts: dict[str, int] = {}
            for cell in snap.scan(TABLE_EDGE):
                counts[cell.col] = counts.get(cell.col, 0) + 1
            for cell in snap.scan(TABLE_DEGREE):
                if cell.row not in counts:
                    store.delete(TABLE_DEGREE, cell.row, cell.col)
            for col, n in counts.items():
                if store.get(TABLE_DEGREE, col, "degree") != str(n):
                    store.put(TABLE_DEGREE, col, "degree", str(n))

    def flush(self) -> None:
        self._store.flush()

    def compact(self) -> None:
        self._store.compact()

    def close(self) -> None:
        self._store.close()

    def __enter__(self) -> "TableSet":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
