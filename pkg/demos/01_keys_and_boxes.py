"""Interleaved lat/lon keys: encoding, ranges, and Z-order false positives.

Run:  python3 demos/01_keys_and_boxes.py
"""

import random

from cityglow.geokey import BBox, box_range, decode_latlon, encode_latlon, refine

# One key carries both coordinates: two signs, then lat and lon digits
# alternating character by character.
for lat, lon in [(42.350, -71.090), (42.357, -71.099), (0.0, 0.0)]:
    key = encode_latlon(lat, lon)
    print(f"({lat:+.3f}, {lon:+.3f})  ->  {key}  ->  {decode_latlon(key)}")

# A bounding box becomes a single key range: everything inside the box
# scans between these two strings.
box = BBox(42.350, 42.357, -71.099, -71.090)
rng_keys = box_range(box)
print(f"\ncampus box scans [{rng_keys.start} .. {rng_keys.end}]")

# This particular box is exactly rectangular in key space (the shared
# prefix covers every digit but the last of each axis), so its scan has
# no false positives. Shrink the lon side and the Z-order walk starts
# visiting keys outside the box; refine() removes them.
narrow = BBox(42.350, 42.357, -71.095, -71.090)
n_keys = box_range(narrow)
print(f"narrower box scans [{n_keys.start} .. {n_keys.end}]")

rng = random.Random(7)
points = [(rng.uniform(42.348, 42.359), rng.uniform(-71.101, -71.088)) for _ in range(20_000)]
candidates = [
    (key, (lat, lon))
    for lat, lon in points
    if n_keys.start <= (key := encode_latlon(lat, lon)) <= n_keys.end
]
kept = refine(candidates, narrow)
print(f"{len(points)} random points -> {len(candidates)} in key range")
print(f"refine() kept {len(kept)}, dropped {len(candidates) - len(kept)} Z-order false positives")

stray = encode_latlon(42.356, -71.099)
print(f"\nexample stray: key {stray} (lon -71.099) sits inside the range: "
      f"{n_keys.start <= stray <= n_keys.end}")
print(f"refine() drops it: {refine([(stray, None)], narrow) == []}")
