"""Point cloud to height grid to a shaded frame.

Run:  python3 demos/04_heightmap.py
Writes demo_out/heightmap/{cloud.txt,heightmap.tsv,height.ppm}.
"""

import pathlib
import random


from cityglow.geokey import BBox
from cityglow.gridmap import GridSpec, build_height_grid, load_point_cloud, save_height_grid
from cityglow.render import render_height, write_ppm
from synth import BBOX, point_cloud_lines

out = pathlib.Path("demo_out/heightmap")
out.mkdir(parents=True, exist_ok=True)

rng = random.Random(3)
cloud_path = out / "cloud.txt"
cloud_path.write_text(point_cloud_lines(rng), encoding="utf-8")

cloud = load_point_cloud(cloud_path)
print(f"loaded {len(cloud)} points, z range [{cloud.zs.min():.1f}, {cloud.zs.max():.1f}] m")

spec = GridSpec(BBox(*BBOX), nrows=70, ncols=90)
hg = build_height_grid(cloud, spec)
save_height_grid(hg, out / "heightmap.tsv")

nonzero = hg.heights[hg.heights > 1.0]
print(f"grid {spec.nrows}x{spec.ncols}: {len(nonzero)} cells above 1 m, tallest {hg.heights.max():.1f} m")

# Crude terminal rendering: one character per 2x3 cells, north up.
downsampled = hg.heights[::10, ::10]
ramp = " .:-=+*#%@"
print("\nheight map (north up):")
for row in downsampled[::-1]:
    line = "".join(ramp[min(int(v / downsampled.max() * (len(ramp) - 1)), len(ramp) - 1)] for v in row)
    print("  " + line)

frame = render_height(hg)
write_ppm(frame, out / "height.ppm")
print(f"\nwrote {out / 'height.ppm'} ({frame.width}x{frame.height})")
