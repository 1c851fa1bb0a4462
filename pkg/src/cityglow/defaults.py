"""Default scene: the MIT campus box at roughly 1e-4 degrees per cell."""

from cityglow.geokey import BBox, GeoKeyFormat
from cityglow.gridmap import GridSpec

MIT_CAMPUS_BBOX = BBox(lat_min=42.350, lat_max=42.357, lon_min=-71.099, lon_max=-71.090)
DEFAULT_GRID = GridSpec(bbox=MIT_CAMPUS_BBOX, nrows=70, ncols=90)
DEFAULT_KEY_FORMAT = GeoKeyFormat(int_digits=2, frac_digits=3)
