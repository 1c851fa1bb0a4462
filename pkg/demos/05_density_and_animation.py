"""Density, keyword overlays and time animation as PPM frames.

Run:  python3 demos/05_density_and_animation.py
Writes demo_out/frames/*.ppm.
"""

import pathlib
import random
import shutil

from cityglow.geokey import BBox
from cityglow.gridmap import GridSpec, build_height_grid, load_point_cloud
from cityglow.ingest import TweetRecord, parse_feed_line
from cityglow.render import (
    animate,
    density_counts,
    render_density,
    render_height,
    render_keyword,
    top_terms,
    write_ppm,
)
from synth import BBOX, T0, T1, feed_lines, point_cloud_lines

out = pathlib.Path("demo_out/frames")
shutil.rmtree(out, ignore_errors=True)
out.mkdir(parents=True)

rng = random.Random(77)
spec = GridSpec(BBox(*BBOX), nrows=70, ncols=90)

records = []
for line in feed_lines(rng, 4000).splitlines():
    rec = parse_feed_line(line)
    if isinstance(rec, TweetRecord):
        records.append(rec)
print(f"{len(records)} records over {spec.nrows}x{spec.ncols} cells")

counts = density_counts(records, spec)
print(f"busiest cell holds {counts.max()} records; total binned {counts.sum()}")

write_ppm(render_density(records, spec, log_scale=True), out / "density.ppm")

# Keyword highlight composited over the height shading.
cloud_file = out / "cloud.txt"
cloud_file.write_text(point_cloud_lines(rng, n_points=30_000), encoding="utf-8")
hg = build_height_grid(load_point_cloud(cloud_file), spec)
base = render_height(hg)
write_ppm(render_keyword(records, "hack", spec, base, alpha=0.6), out / "keyword_hack.ppm")

# Per-cell top terms: the labels a display would draw over busy cells.
grid_terms = top_terms(records, spec, k=3)
labeled = [
    (row, col, terms)
    for row, row_terms in enumerate(grid_terms)
    for col, terms in enumerate(row_terms)
    if terms
]
print(f"\n{len(labeled)} cells carry labels; busiest:")
for row, col, terms in sorted(labeled, key=lambda x: -x[2][0][1])[:6]:
    label = ", ".join(f"{t}x{n}" for t, n in terms)
    print(f"  cell ({row:2d},{col:2d}): {label}")

# Animation: equal time slices, brightness comparable across frames.
frames = animate(records, spec, T0, T1, bins=12, log_scale=True)
for i, frame in enumerate(frames):
    write_ppm(frame, out / f"animate_{i:02d}.ppm")
print(f"\nwrote density.ppm, keyword_hack.ppm and {len(frames)} animation frames to {out}")
