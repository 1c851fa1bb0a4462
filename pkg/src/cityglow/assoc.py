"""Associative-array selection over the exploded tables.

A selection like "all rows, latlon columns in [start, end]" runs against
the transpose table (that is what it exists for), producing sorted
(row, col, val) triples.  query_bbox composes the full path: quadrant
split, key-range scan, Z-order refinement, record extraction, then time
and keyword filters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from cityglow.geokey import (
    BBox,
    GeoKeyFormat,
    GeoKeyRange,
    box_range,
    decode_latlon,
    refine,
)
from cityglow.ingest import TweetRecord
from cityglow.store import TABLE_EDGE_T, TableSet, TableSnapshot, token_set

_LATLON_PREFIX = "latlon|"


@dataclass
class AssocArray:
    """Sorted (row, col, val) triples, at most one val per (row, col)."""

    triples: list[tuple[str, str, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.triples.sort(key=lambda t: (t[0], t[1]))
        for a, b in zip(self.triples, self.triples[1:]):
            if a[0] == b[0] and a[1] == b[1]:
                raise ValueError(f"duplicate (row, col) pair {a[:2]}")

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)

    def rows(self) -> list[str]:
        return [t[0] for t in self.triples]


def _select_cols(snap: TableSnapshot, key_range: GeoKeyRange) -> AssocArray:
    start = _LATLON_PREFIX + key_range.start
    end = _LATLON_PREFIX + key_range.end
    triples = [
        (cell.col, cell.row, cell.val)
        for cell in snap.scan_range(TABLE_EDGE_T, start, end)
    ]
    return AssocArray(triples)


def select_cols(ts: TableSet, key_range: GeoKeyRange) -> AssocArray:
    """All rows, latlon columns restricted to the inclusive key range."""
    return _select_cols(ts.snapshot(), key_range)


def _extract(snap: TableSnapshot, a: AssocArray, fmt: GeoKeyFormat) -> list[TweetRecord]:
    records = []
    for rec_id, col, _val in a:
        lat, lon = decode_latlon(col[len(_LATLON_PREFIX):], fmt)
        user, ts_val, text = snap.record_meta(rec_id)
        records.append(TweetRecord(id=rec_id, ts=ts_val, lat=lat, lon=lon, user=user, text=text))
    records.sort(key=lambda r: r.id)
    return records


def extract_tweets(ts: TableSet, a: AssocArray, fmt: GeoKeyFormat | None = None) -> list[TweetRecord]:
    """Decode coordinates from the latlon columns and join back the text,
    user and timestamp; output sorted by id."""
    return _extract(ts.snapshot(), a, fmt or ts.fmt)


def split_bbox_quadrants(bbox: BBox) -> list[tuple[BBox, tuple[str, str]]]:
    """Split a box into at most 4 single-quadrant pieces.

    Each piece carries the sign pair its keys use.  A piece whose
    negative axis is [lo, 0] pins the '-' sign: points at exactly zero
    encode as '+' and are covered by the adjacent '+' piece.
    """

    def axis_parts(lo: float, hi: float) -> list[tuple[float, float, str]]:
        if lo < 0 and hi >= 0:
            return [(lo, 0.0, "-"), (0.0, hi, "+")]
        return [(lo, hi, "-" if hi < 0 else "+")]

    pieces = []
    for lat_lo, lat_hi, lat_sign in axis_parts(bbox.lat_min, bbox.lat_max):
        for lon_lo, lon_hi, lon_sign in axis_parts(bbox.lon_min, bbox.lon_max):
            pieces.append((BBox(lat_lo, lat_hi, lon_lo, lon_hi), (lat_sign, lon_sign)))
    return pieces


def query_bbox(
    ts: TableSet,
    bbox: BBox,
    t0: int | None = None,
    t1: int | None = None,
    keyword: str | None = None,
    fmt: GeoKeyFormat | None = None,
) -> list[TweetRecord]:
    """Records inside the box, optionally filtered by [t0, t1] and keyword.

    Coordinates compare at the store's key resolution (what was indexed);
    keyword matching is exact-token and case-insensitive.  Output sorted
    by (timestamp, id).
    """
    if t0 is not None and t1 is not None and t0 > t1:
        raise ValueError(f"time window reversed: {t0} > {t1}")
    fmt = fmt or ts.fmt
    snap = ts.snapshot()

    kept: list[tuple[str, str, str]] = []
    for sub_box, signs in split_bbox_quadrants(bbox):
        key_range = box_range(sub_box, fmt, signs=signs)
        candidates = [
            (col[len(_LATLON_PREFIX):], (row, col, val))
            for row, col, val in _select_cols(snap, key_range)
        ]
        # Refine against the original box: sub-boxes only route the scan.
        kept.extend(triple for _key, triple in refine(candidates, bbox, fmt))

    records = _extract(snap, AssocArray(kept), fmt)
    if t0 is not None:
        records = [r for r in records if r.ts >= t0]
    if t1 is not None:
        records = [r for r in records if r.ts <= t1]
    if keyword is not None and keyword != "":
        needle = keyword.lower()
        records = [r for r in records if needle in token_set(r.text)]
    records.sort(key=lambda r: (r.ts, r.id))
    return records
