"""Acceptance suite: one test per criterion, one printed line per result.

Run with `pytest -s tests/test_acceptance.py` to see the PASS lines, or
plain `pytest` and read the per-test verdicts.
"""

import base64
import random
import time
from collections import Counter

import numpy as np
from fastapi.testclient import TestClient

from cityglow.assoc import query_bbox
from cityglow.geokey import BBox, decode_latlon, encode_latlon
from cityglow.gridmap import GridSpec, PointCloud, build_height_grid
from cityglow.ingest import TweetRecord, from_tsv, to_tsv
from cityglow.render import (
    Colormap,
    FrameBuffer,
    animate,
    composite,
    density_counts,
    render_height,
)
from cityglow.service import ServerConfig, create_app, load_server_state, record_to_dict
from cityglow.store import (
    TABLE_DEGREE,
    TABLE_EDGE,
    TABLE_EDGE_T,
    TABLES,
    TableSet,
    token_set,
)
from helpers import make_record, milli, round_away

MIT_BOX = BBox(42.350, 42.357, -71.099, -71.090)


def report(name: str) -> None:
    print(f"PASS  {name}", flush=True)


def test_reference_key_encoding():
    assert encode_latlon(42.350, -71.090) == "+-4721..305900"
    assert encode_latlon(42.357, -71.099) == "+-4721..305979"
    report("reference key encoding: campus corner keys byte-exact")


def test_geokey_round_trip_10k():
    rng = random.Random(2024)
    failures = 0
    for _ in range(10_000):
        lat = rng.uniform(-90.0, 90.0)
        lon = rng.uniform(-99.999, 99.999)
        if decode_latlon(encode_latlon(lat, lon)) != (round(lat, 3), round(lon, 3)):
            failures += 1
    assert failures == 0
    report("geokey round trip: 10,000 coordinates, zero failures")


def _brute_force(records, bbox, t0=None, t1=None, keyword=None):
    out = set()
    for r in records:
        lat, lon = round_away(r.lat, 3), round_away(r.lon, 3)
        if not (bbox.lat_min <= lat <= bbox.lat_max and bbox.lon_min <= lon <= bbox.lon_max):
            continue
        if t0 is not None and r.ts < t0:
            continue
        if t1 is not None and r.ts > t1:
            continue
        if keyword and keyword.lower() not in token_set(r.text):
            continue
        out.add((r.id, r.ts, lat, lon, r.user, r.text))
    return out


def test_query_oracle_equivalence(tmp_path):
    started = time.monotonic()
    rng = random.Random(99)

    campus = TableSet.open(tmp_path / "campus")
    campus_records = [
        make_record(i, rng, lat_range=(42.340, 42.367), lon_range=(-71.109, -71.080))
        for i in range(10_000)
    ]
    for r in campus_records:
        campus.put_record(r)

    origin = TableSet.open(tmp_path / "origin")
    origin_records = []
    for i in range(2_000):
        rec = TweetRecord(
            id=f"o{i}",
            ts=rng.randint(0, 10_000),
            lat=milli(rng, -0.05, 0.05),
            lon=milli(rng, -0.05, 0.05),
            user="u",
            text=rng.choice(("origin point", "axis mit", "zero zone")),
        )
        origin_records.append(rec)
        origin.put_record(rec)
    for j, (lat, lon) in enumerate([(0.0, 0.0), (0.0, 0.02), (0.02, 0.0), (-0.02, 0.0), (0.0, -0.02)]):
        rec = TweetRecord(id=f"ax{j}", ts=j, lat=lat, lon=lon, user="u", text="on axis")
        origin_records.append(rec)
        origin.put_record(rec)

    boxes = 0
    for _ in range(70):
        lat_a, lat_b = sorted(rng.uniform(42.340, 42.367) for _ in range(2))
        lon_a, lon_b = sorted(rng.uniform(-71.109, -71.080) for _ in range(2))
        box = BBox(lat_a, lat_b, lon_a, lon_b)
        t0, t1 = sorted(rng.randint(1_388_534_400, 1_388_620_800) for _ in range(2))
        keyword = rng.choice((None, "mit", "tech", "storm"))
        got = {
            (r.id, r.ts, r.lat, r.lon, r.user, r.text)
            for r in query_bbox(campus, box, t0, t1, keyword)
        }
        assert got == _brute_force(campus_records, box, t0, t1, keyword)
        boxes += 1
    for _ in range(30):
        lat_a, lat_b = sorted(rng.uniform(-0.05, 0.05) for _ in range(2))
        lon_a, lon_b = sorted(rng.uniform(-0.05, 0.05) for _ in range(2))
        box = BBox(lat_a, lat_b, lon_a, lon_b)
        got = {
            (r.id, r.ts, r.lat, r.lon, r.user, r.text) for r in query_bbox(origin, box)
        }
        assert got == _brute_force(origin_records, box)
        boxes += 1

    campus.close()
    origin.close()
    elapsed = time.monotonic() - started
    assert boxes == 100
    assert elapsed < 30.0
    report(f"query oracle equivalence: 100 boxes exact in {elapsed:.1f}s")


def test_store_consistency(tmp_path):
    rng = random.Random(5)
    path = tmp_path / "store"
    ts = TableSet.open(path)
    for _ in range(400):
        ts.put_record(make_record(rng.randint(0, 120), rng))  # duplicate ids guaranteed

    edge = list(ts.scan_all(TABLE_EDGE))
    edge_t = list(ts.scan_all(TABLE_EDGE_T))
    assert {(c.row, c.col, c.val) for c in edge} == {(c.col, c.row, c.val) for c in edge_t}
    recount = Counter(c.col for c in edge)
    degrees = {c.row: c.val for c in ts.scan_all(TABLE_DEGREE)}
    assert degrees == {col: str(n) for col, n in recount.items()}

    before = {table: list(ts.scan_all(table)) for table in TABLES}
    ts.close()
    reopened = TableSet.open(path)
    after = {table: list(reopened.scan_all(table)) for table in TABLES}
    reopened.close()
    assert after == before
    report("store consistency: transpose + degree exact, reopen byte-identical")


def test_heightmap_building(tmp_path):
    rng = random.Random(11)
    spec = GridSpec(MIT_BOX, 7, 9)
    box = spec.bbox

    lats, lons, zs = [], [], []
    for row in range(spec.nrows):
        for col in range(spec.ncols):
            lat0 = box.lat_min + (box.lat_max - box.lat_min) * row / spec.nrows
            lat1 = box.lat_min + (box.lat_max - box.lat_min) * (row + 1) / spec.nrows
            lon0 = box.lon_min + (box.lon_max - box.lon_min) * col / spec.ncols
            lon1 = box.lon_min + (box.lon_max - box.lon_min) * (col + 1) / spec.ncols
            for z_mu in (0.0, 10.0):  # ground and flat roof
                for _ in range(25):
                    lats.append(rng.uniform(lat0, lat1))
                    lons.append(rng.uniform(lon0, lon1))
                    zs.append(rng.gauss(z_mu, 0.05))
    cloud = PointCloud(np.array(lats), np.array(lons), np.array(zs))
    hg = build_height_grid(cloud, spec)
    assert np.abs(hg.heights - 10.0).max() <= 0.5

    flat = PointCloud(np.array(lats), np.array(lons), np.full(len(lats), 12.0))
    assert (build_height_grid(flat, spec).heights == 0).all()
    report("heightmap: 10 m building within ±0.5 m, flat plane all zeros")


def test_render_conservation():
    rng = random.Random(21)
    spec = GridSpec(MIT_BOX, 7, 9)
    recs = [
        make_record(i, rng, lat_range=(42.340, 42.367), lon_range=(-71.109, -71.080), on_grid=False)
        for i in range(500)
    ]
    in_box = sum(1 for r in recs if spec.bbox.contains(r.lat, r.lon))
    assert density_counts(recs, spec).sum() == in_box

    t0, t1, bins = 1_388_540_000, 1_388_610_000, 6
    in_window = [r for r in recs if t0 <= r.ts <= t1]
    assigned = []
    for r in in_window:
        hits = [
            i
            for i in range(bins)
            if (
                (i == bins - 1 and t0 + (t1 - t0) * i / bins <= r.ts <= t1)
                or (i < bins - 1 and t0 + (t1 - t0) * i / bins <= r.ts < t0 + (t1 - t0) * (i + 1) / bins)
            )
        ]
        assert len(hits) == 1
        assigned.append(hits[0])
    frames = animate(recs, spec, t0, t1, bins)
    assert len(frames) == bins

    base = FrameBuffer(9, 7, bytes(rng.randrange(256) for _ in range(9 * 7 * 3)))
    overlay = FrameBuffer(9, 7, bytes(rng.randrange(256) for _ in range(9 * 7 * 3)))
    assert composite(base, overlay, 0.0).pixels == base.pixels
    assert composite(base, overlay, 1.0).pixels == overlay.pixels
    report("render conservation: density sum, bin partition, alpha identities")


def test_tsv_fuzz_round_trip():
    rng = random.Random(33)
    soup = [
        "tab\there",
        "line\nbreak",
        "cr\rhere",
        "back\\slash",
        "\\t literal",
        "emoji \U0001f30e\U0001f680",
        "中文 and русский",
        "quotes \"'`",
        "",
    ]
    for i in range(1_000):
        rec = TweetRecord(
            id=f"fz{i}",
            ts=rng.randint(0, 2_000_000_000),
            lat=milli(rng, -90, 90),
            lon=milli(rng, -180, 180),
            user="".join(rng.choice(soup) for _ in range(rng.randint(0, 3))),
            text="".join(rng.choice(soup) for _ in range(rng.randint(0, 6))),
        )
        assert from_tsv(to_tsv(rec)) == rec
    report("TSV fuzz round trip: 1,000 adversarial records unchanged")


def test_service_parity(tmp_path):
    grid = GridSpec(MIT_BOX, 7, 9)
    config = ServerConfig(data_dir=str(tmp_path / "data"), grid=grid, frame_period_ms=20)
    state = load_server_state(config)
    app = create_app(state=state)
    feed = "\n".join(
        [
            '{"id":"1","ts":1388534400,"user":"alice","text":"hello dome","geo":[-71.092,42.355]}',
            '{"id":"2","ts":1388534500,"user":"bob","text":"mit hack","geo":[-71.0955,42.3525]}',
            '{"id":"3","ts":1388534600,"user":"carol","text":"tech tour","geo":[-71.091,42.3565]}',
        ]
    )
    with TestClient(app) as client:
        assert client.post("/api/ingest", content=feed.encode("utf-8")).status_code == 200
        params = {"lat0": 42.350, "lat1": 42.357, "lon0": -71.099, "lon1": -71.090}
        got = client.get("/api/tweets", params=params).json()
        want = [record_to_dict(r) for r in query_bbox(state.tables, MIT_BOX)]
        assert got == want and len(got) == 3

        assert client.put("/api/scheme", json={"mode": "height"}).status_code == 200
        with client.websocket_connect("/api/frames") as ws:
            msg = ws.receive_json()
        expected = render_height(state.heightmap, state.scheme.colormap)
        assert base64.b64decode(msg["pix"]) == expected.pixels
    state.tables.close()
    report("service parity: /api/tweets equals library, WS frame equals render")
