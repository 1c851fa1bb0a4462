"""Synthetic campus data shared by the demo scripts.

Builds a plausible scene: a few "buildings" as flat-roofed boxes for the
point cloud, and a feed of geo-tagged posts clustered around hotspots.
"""

import json
import random

BBOX = (42.350, 42.357, -71.099, -71.090)  # lat_min, lat_max, lon_min, lon_max

BUILDINGS = [
    # (lat_center, lon_center, lat_extent, lon_extent, roof_height_m)
    (42.3515, -71.0975, 0.0012, 0.0016, 22.0),
    (42.3530, -71.0940, 0.0016, 0.0020, 34.0),
    (42.3555, -71.0920, 0.0010, 0.0012, 16.0),
    (42.3560, -71.0965, 0.0008, 0.0024, 12.0),
]

HOTSPOTS = [
    # (lat, lon, spread, weight, favorite words)
    (42.3531, -71.0941, 0.0008, 5, ("dome", "tour", "class")),
    (42.3515, -71.0975, 0.0006, 3, ("hack", "night", "mit")),
    (42.3558, -71.0912, 0.0010, 2, ("river", "run", "sunset")),
]

FILLER = ("campus", "coffee", "train", "bridge", "music", "game", "storm", "lab")

T0 = 1_388_534_400  # 2014-01-01T00:00Z
T1 = T0 + 6 * 3600


def point_cloud_lines(rng: random.Random, n_points: int = 60_000):
    """Ground points everywhere, roof returns over the buildings.

    Building footprints mix roof and ground returns so each covered cell
    sees both the surface and the terrain under it.
    """
    lat_min, lat_max, lon_min, lon_max = BBOX
    lines = ["# synthetic campus laser-scan cloud: lat lon z"]
    for _ in range(n_points):
        lat = rng.uniform(lat_min, lat_max)
        lon = rng.uniform(lon_min, lon_max)
        z = rng.gauss(0.0, 0.15)  # ground
        for b_lat, b_lon, d_lat, d_lon, roof in BUILDINGS:
            if abs(lat - b_lat) < d_lat and abs(lon - b_lon) < d_lon:
                if rng.random() < 0.7:
                    z = rng.gauss(roof, 0.2)
                break
        lines.append(f"{lat:.6f} {lon:.6f} {z:.2f}")
    return "\n".join(lines) + "\n"


def feed_lines(rng: random.Random, n: int = 3000):
    """JSON-lines feed with geo gaps and malformed lines mixed in."""
    lat_min, lat_max, lon_min, lon_max = BBOX
    lines = []
    for i in range(n):
        roll = rng.random()
        if roll < 0.05:
            lines.append("{oops not json")
            continue
        if roll < 0.15:
            lines.append(
                json.dumps(
                    {"id": f"p{i}", "ts": rng.randint(T0, T1), "user": "lurker", "text": "somewhere", "geo": None}
                )
            )
            continue
        lat, lon, words = None, None, FILLER
        if rng.random() < 0.8:
            c_lat, c_lon, spread, _w, favs = rng.choices(HOTSPOTS, weights=[h[3] for h in HOTSPOTS])[0]
            lat = min(max(rng.gauss(c_lat, spread), lat_min), lat_max)
            lon = min(max(rng.gauss(c_lon, spread), lon_min), lon_max)
            words = favs + FILLER
        else:
            lat = rng.uniform(lat_min, lat_max)
            lon = rng.uniform(lon_min, lon_max)
        text = " ".join(rng.choice(words) for _ in range(rng.randint(2, 7)))
        lines.append(
            json.dumps(
                {
                    "id": f"p{i}",
                    "ts": rng.randint(T0, T1),
                    "user": rng.choice(("alice", "bob", "carol", "dan", "eve")),
                    "text": text,
                    "geo": [round(lon, 6), round(lat, 6)],
                }
            )
        )
    return "\n".join(lines) + "\n"
