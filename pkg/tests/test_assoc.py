
import pytest

from cityglow.assoc import (
    AssocArray,
    extract_tweets,
    query_bbox,
    select_cols,
    split_bbox_quadrants,
)
from cityglow.geokey import BBox, GeoKeyRange, box_range, encode_latlon
from cityglow.ingest import TweetRecord
from cityglow.store import TABLE_EDGE_T, TableSet, token_set
from helpers import make_record, milli, round_away


@pytest.fixture
def campus_tables(tmp_path, rng):
    records = [make_record(i, rng, lat_range=(42.340, 42.367), lon_range=(-71.109, -71.080)) for i in range(200)]
    ts = TableSet.open(tmp_path / "s")
    for rec in records:
        ts.put_record(rec)
    yield ts, records
    ts.close()


def brute_force_box(records, bbox, t0=None, t1=None, keyword=None, digits=3):
    """Independent filter: exact-rounded coordinates, closed bounds."""
    out = []
    for r in records:
        lat, lon = round_away(r.lat, digits), round_away(r.lon, digits)
        if not (bbox.lat_min <= lat <= bbox.lat_max and bbox.lon_min <= lon <= bbox.lon_max):
            continue
        if t0 is not None and r.ts < t0:
            continue
        if t1 is not None and r.ts > t1:
            continue
        if keyword and keyword.lower() not in token_set(r.text):
            continue
        out.append((r.id, r.ts, lat, lon, r.user, r.text))
    return set(out)


def as_tuples(records):
    return {(r.id, r.ts, r.lat, r.lon, r.user, r.text) for r in records}


# ---------------------------------------------------------------------------
# AssocArray and select_cols
# ---------------------------------------------------------------------------


def test_assoc_array_sorts_and_rejects_duplicates():
    a = AssocArray([("b", "y", "1"), ("a", "x", "1")])
    assert a.triples == [("a", "x", "1"), ("b", "y", "1")]
    with pytest.raises(ValueError):
        AssocArray([("a", "x", "1"), ("a", "x", "2")])


def test_select_cols_matches_brute_force(campus_tables, rng):
    ts, _records = campus_tables
    all_latlon = [c for c in ts.scan_all(TABLE_EDGE_T) if c.row.startswith("latlon|")]
    for _ in range(25):
        lat_a, lat_b = sorted(milli(rng, 42.340, 42.367) for _ in range(2))
        lon_a, lon_b = sorted(milli(rng, -71.109, -71.080) for _ in range(2))
        rng_keys = box_range(BBox(lat_a, lat_b, lon_a, lon_b))
        got = select_cols(ts, rng_keys)
        lo, hi = "latlon|" + rng_keys.start, "latlon|" + rng_keys.end
        want = sorted(
            (c.col, c.row, c.val) for c in all_latlon if lo <= c.row <= hi
        )
        assert got.triples == want


def test_select_cols_empty_store(tmp_path):
    with TableSet.open(tmp_path / "s") as ts:
        rng_keys = box_range(BBox(42.350, 42.357, -71.099, -71.090))
        assert len(select_cols(ts, rng_keys)) == 0


def test_select_cols_three_of_five_inside(tmp_path):
    box = BBox(42.350, 42.357, -71.099, -71.090)
    inside = [(42.351, -71.092), (42.353, -71.095), (42.356, -71.091)]
    outside = [(42.340, -71.092), (42.353, -71.085)]
    with TableSet.open(tmp_path / "s") as ts:
        for i, (lat, lon) in enumerate(inside + outside):
            ts.put_record(TweetRecord(f"r{i}", i, lat, lon, "u", "x"))
        got = select_cols(ts, box_range(box))
        assert len(got) == 3
        assert got.rows() == ["r0", "r1", "r2"]


def test_extract_missing_text_is_integrity_error(tmp_path):
    from cityglow.store import StoreIntegrityError, TABLE_EDGE_T

    with TableSet.open(tmp_path / "s") as ts:
        key = encode_latlon(42.353, -71.095)
        ts.store.put(TABLE_EDGE_T, f"latlon|{key}", "ghost", "1")
        a = select_cols(ts, box_range(BBox(42.350, 42.357, -71.099, -71.090)))
        assert len(a) == 1
        with pytest.raises(StoreIntegrityError):
            extract_tweets(ts, a)


def test_select_cols_full_range_hits_every_record(campus_tables):
    ts, records = campus_tables
    full = GeoKeyRange("++0000..000000", "--9999..999999")
    # sign prefixes order '+' < '-', so scan both quadrant families
    triples = []
    for prefix in ("+-", "++", "-+", "--"):
        rng_keys = GeoKeyRange(prefix + "0000..000000", prefix + "9999..999999")
        triples.extend(select_cols(ts, rng_keys).triples)
    assert len(triples) == len({r.id for r in records})


# ---------------------------------------------------------------------------
# extract_tweets
# ---------------------------------------------------------------------------


def test_extract_single_triple(tmp_path):
    with TableSet.open(tmp_path / "s") as ts:
        ts.put_record(TweetRecord("1", 77, 42.3501, -71.0904, "alice", "hi dome"))
        key = encode_latlon(42.3501, -71.0904)
        a = AssocArray([("1", f"latlon|{key}", "1")])
        [rec] = extract_tweets(ts, a)
        assert rec == TweetRecord("1", 77, 42.350, -71.090, "alice", "hi dome")


def test_extract_empty(tmp_path):
    with TableSet.open(tmp_path / "s") as ts:
        assert extract_tweets(ts, AssocArray([])) == []


def test_full_range_extract_recovers_all_records(campus_tables):
    ts, records = campus_tables
    got = query_bbox(ts, BBox(42.340, 42.367, -71.109, -71.080))
    want = {
        (r.id, r.ts, round_away(r.lat, 3), round_away(r.lon, 3), r.user, r.text)
        for r in records
    }
    assert as_tuples(got) == want


# ---------------------------------------------------------------------------
# query_bbox
# ---------------------------------------------------------------------------


def test_query_bbox_matches_oracle(campus_tables, rng):
    ts, records = campus_tables
    for _ in range(20):
        lat_a, lat_b = sorted(rng.uniform(42.340, 42.367) for _ in range(2))
        lon_a, lon_b = sorted(rng.uniform(-71.109, -71.080) for _ in range(2))
        box = BBox(lat_a, lat_b, lon_a, lon_b)
        got = query_bbox(ts, box)
        assert as_tuples(got) == brute_force_box(records, box)


def test_query_bbox_keyword_filter(campus_tables):
    ts, records = campus_tables
    box = BBox(42.340, 42.367, -71.109, -71.080)
    got = query_bbox(ts, box, keyword="mit")
    assert as_tuples(got) == brute_force_box(records, box, keyword="mit")
    assert all("mit" in token_set(r.text) for r in got)


def test_query_bbox_keyword_is_case_insensitive(campus_tables):
    ts, records = campus_tables
    box = BBox(42.340, 42.367, -71.109, -71.080)
    assert query_bbox(ts, box, keyword="MIT") == query_bbox(ts, box, keyword="mit")


def test_query_bbox_time_boundaries_inclusive(campus_tables):
    ts, records = campus_tables
    box = BBox(42.340, 42.367, -71.109, -71.080)
    pivot = records[0].ts
    got = query_bbox(ts, box, t0=pivot, t1=pivot)
    assert as_tuples(got) == brute_force_box(records, box, t0=pivot, t1=pivot)
    assert all(r.ts == pivot for r in got)


def test_query_bbox_sorted_by_time_then_id(campus_tables):
    ts, _records = campus_tables
    got = query_bbox(ts, BBox(42.340, 42.367, -71.109, -71.080))
    assert [(r.ts, r.id) for r in got] == sorted((r.ts, r.id) for r in got)


def test_query_bbox_rejects_reversed_window(campus_tables):
    ts, _records = campus_tables
    with pytest.raises(ValueError):
        query_bbox(ts, BBox(42.35, 42.36, -71.1, -71.09), t0=10, t1=5)


# ---------------------------------------------------------------------------
# Quadrant splitting
# ---------------------------------------------------------------------------


def test_split_single_quadrant_box_is_identity():
    box = BBox(42.350, 42.357, -71.099, -71.090)
    assert split_bbox_quadrants(box) == [(box, ("+", "-"))]


def test_split_cross_quadrant_box_makes_four():
    box = BBox(-1.0, 1.0, -2.0, 2.0)
    pieces = split_bbox_quadrants(box)
    assert len(pieces) == 4
    signs = {s for _b, s in pieces}
    assert signs == {("-", "-"), ("-", "+"), ("+", "-"), ("+", "+")}


def test_query_bbox_across_origin(tmp_path, rng):
    ts = TableSet.open(tmp_path / "s")
    records = []
    for i in range(400):
        rec = TweetRecord(
            id=f"o{i}",
            ts=i,
            lat=milli(rng, -0.02, 0.02),
            lon=milli(rng, -0.02, 0.02),
            user="u",
            text="origin",
        )
        records.append(rec)
        ts.put_record(rec)
    # points exactly on the axes
    for j, (lat, lon) in enumerate([(0.0, 0.0), (0.0, 0.01), (0.01, 0.0), (-0.01, 0.0), (0.0, -0.01)]):
        rec = TweetRecord(id=f"ax{j}", ts=1000 + j, lat=lat, lon=lon, user="u", text="axis")
        records.append(rec)
        ts.put_record(rec)
    for _ in range(25):
        lat_a, lat_b = sorted(rng.uniform(-0.02, 0.02) for _ in range(2))
        lon_a, lon_b = sorted(rng.uniform(-0.02, 0.02) for _ in range(2))
        box = BBox(lat_a, lat_b, lon_a, lon_b)
        assert as_tuples(query_bbox(ts, box)) == brute_force_box(records, box)
    # boxes with a zero edge
    for box in [BBox(-0.01, 0.0, -0.01, 0.01), BBox(0.0, 0.01, -0.01, 0.0)]:
        assert as_tuples(query_bbox(ts, box)) == brute_force_box(records, box)
    ts.close()
