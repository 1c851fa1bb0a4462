"""Drive the live service end to end: ingest, steer schemes, pull frames.

Uses an in-process test client so the demo needs no open port; `cityglow
serve` runs the same app over real HTTP/WS.

Run:  python3 demos/06_live_service.py
"""

import base64
import pathlib
import random
import shutil

from fastapi.testclient import TestClient

from cityglow.geokey import BBox
from cityglow.gridmap import GridSpec, build_height_grid, load_point_cloud, save_height_grid
from cityglow.service import HEIGHTMAP_FILENAME, ServerConfig, create_app, load_server_state
from synth import BBOX, T0, T1, feed_lines, point_cloud_lines

out = pathlib.Path("demo_out/live_service")
shutil.rmtree(out, ignore_errors=True)
data_dir = out / "data"
data_dir.mkdir(parents=True)

rng = random.Random(5)

cloud_file = out / "cloud.txt"
cloud_file.write_text(point_cloud_lines(rng, n_points=30_000), encoding="utf-8")
spec = GridSpec(BBox(*BBOX), nrows=70, ncols=90)
save_height_grid(build_height_grid(load_point_cloud(cloud_file), spec), data_dir / HEIGHTMAP_FILENAME)

config = ServerConfig(data_dir=str(data_dir), grid=spec, frame_period_ms=20)
state = load_server_state(config)
app = create_app(state=state)

with TestClient(app) as client:
    stats = client.post("/api/ingest", content=feed_lines(rng, 2000).encode("utf-8")).json()
    print(f"POST /api/ingest -> {stats}")

    hits = client.get(
        "/api/tweets",
        params={"lat0": BBOX[0], "lat1": BBOX[1], "lon0": BBOX[2], "lon1": BBOX[3], "q": "hack"},
    ).json()
    print(f"GET /api/tweets?q=hack -> {len(hits)} records")

    for scheme in (
        {"mode": "height"},
        {"mode": "density", "log_scale": True},
        {"mode": "keyword", "keyword": "hack", "alpha": 0.7},
        {"mode": "animate", "t0": T0, "t1": T1, "bins": 6},
    ):
        client.put("/api/scheme", json=scheme)
        with client.websocket_connect("/api/frames") as ws:
            msg = ws.receive_json()
        pixels = base64.b64decode(msg["pix"])
        lit = sum(1 for i in range(0, len(pixels), 3) if pixels[i : i + 3] != pixels[:0] + bytes(state.scheme.colormap.low))
        print(f"scheme {scheme['mode']:<8} -> frame seq={msg['seq']} {msg['w']}x{msg['h']}, {lit} lit cells")

    topics = client.get("/api/topics", params={"k": 2}).json()
    print(f"GET /api/topics -> {len(topics['cells'])} labeled cells")
    # Queried records carry the coordinates their index keys encode (three
    # decimals), so server-side density snaps to that lattice.

state.tables.close()
print("done; the browser panel in frontend/ consumes exactly these endpoints")
