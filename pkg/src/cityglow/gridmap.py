"""Height grids and the geographic-to-cell alignment.

The display abstraction is a lattice of cells over a bounding box; row 0
is the southern edge and col 0 the western edge (display clients flip
vertically for screen coordinates).  Heights are meters above ground
level, estimated per cell from a point cloud as the spread between the
5th (ground) and 95th (surface) z percentiles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cityglow.geokey import BBox


class PointFileError(ValueError):
    """Bad row in a point-cloud file; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class GridSpec:
    """Cell lattice over a non-degenerate bounding box."""

    bbox: BBox
    nrows: int
    ncols: int

    def __post_init__(self) -> None:
        if self.nrows < 1 or self.ncols < 1:
            raise ValueError("grid needs at least one row and one column")
        if self.bbox.lat_max <= self.bbox.lat_min or self.bbox.lon_max <= self.bbox.lon_min:
            raise ValueError(f"grid bbox must have positive extent: {self.bbox}")


@dataclass
class PointCloud:
    """Georegistered points: parallel lat/lon/z arrays."""

    lats: np.ndarray
    lons: np.ndarray
    zs: np.ndarray

    def __post_init__(self) -> None:
        self.lats = np.asarray(self.lats, dtype=float)
        self.lons = np.asarray(self.lons, dtype=float)
        self.zs = np.asarray(self.zs, dtype=float)
        if not (self.lats.shape == self.lons.shape == self.zs.shape):
            raise ValueError("lats, lons, zs must have identical shapes")
        if len(self.lats) and (np.abs(self.lats) > 90).any():
            raise ValueError("latitude outside [-90, 90]")
        if len(self.lats) and (np.abs(self.lons) > 180).any():
            raise ValueError("longitude outside [-180, 180]")

    def __len__(self) -> int:
        return len(self.lats)

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.empty(0), np.empty(0), np.empty(0))


@dataclass
class HeightGrid:
    """Per-cell height above ground (meters); empty cells are exactly 0."""

    spec: GridSpec
    heights: np.ndarray

    def __post_init__(self) -> None:
        self.heights = np.asarray(self.heights, dtype=float)
        if self.heights.shape != (self.spec.nrows, self.spec.ncols):
            raise ValueError(
                f"heights shape {self.heights.shape} does not match grid "
                f"{(self.spec.nrows, self.spec.ncols)}"
            )
        if (self.heights < 0).any():
            raise ValueError("heights must be non-negative")

    @classmethod
    def flat(cls, spec: GridSpec) -> "HeightGrid":
        return cls(spec, np.zeros((spec.nrows, spec.ncols)))


def align(lat: float, lon: float, spec: GridSpec) -> tuple[int, int] | None:
    """Map a coordinate to its (row, col) cell, or None when outside.

    Linear binning; points exactly on the max edge clamp into the last
    row/column.
    """
    box = spec.bbox
    if not box.contains(lat, lon):
        return None
    row = int((lat - box.lat_min) / (box.lat_max - box.lat_min) * spec.nrows)
    col = int((lon - box.lon_min) / (box.lon_max - box.lon_min) * spec.ncols)
    return min(row, spec.nrows - 1), min(col, spec.ncols - 1)


def bin_indices(lats, lons, spec: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized align: (rows, cols, inside_mask) for coordinate arrays.

    Row/col values are only meaningful where the mask is set.
    """
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    box = spec.bbox
    inside = (
        (lats >= box.lat_min)
        & (lats <= box.lat_max)
        & (lons >= box.lon_min)
        & (lons <= box.lon_max)
    )
    rows = np.floor((lats - box.lat_min) / (box.lat_max - box.lat_min) * spec.nrows)
    cols = np.floor((lons - box.lon_min) / (box.lon_max - box.lon_min) * spec.ncols)
    rows = np.clip(rows, 0, spec.nrows - 1).astype(int)
    cols = np.clip(cols, 0, spec.ncols - 1).astype(int)
    return rows, cols, inside


def build_height_grid(cloud: PointCloud, spec: GridSpec) -> HeightGrid:
    """Bin the cloud and estimate per-cell height above ground.

    Per cell: ground = 5th percentile of z, surface = 95th percentile,
    height = max(0, surface - ground).  Percentiles rather than min/max
    keep sensor outliers from inflating buildings.
    """
    heights = np.zeros((spec.nrows, spec.ncols))
    if len(cloud) == 0:
        return HeightGrid(spec, heights)
    rows, cols, inside = bin_indices(cloud.lats, cloud.lons, spec)
    rows, cols, zs = rows[inside], cols[inside], cloud.zs[inside]
    if len(zs) == 0:
        return HeightGrid(spec, heights)
    cell_ids = rows * spec.ncols + cols
    order = np.argsort(cell_ids, kind="stable")
    cell_ids, zs = cell_ids[order], zs[order]
    boundaries = np.flatnonzero(np.diff(cell_ids)) + 1
    for chunk_ids, chunk_zs in zip(
        np.split(cell_ids, boundaries), np.split(zs, boundaries)
    ):
        ground = np.percentile(chunk_zs, 5)
        surface = np.percentile(chunk_zs, 95)
        cell = chunk_ids[0]
        heights[cell // spec.ncols, cell % spec.ncols] = max(0.0, surface - ground)
    return HeightGrid(spec, heights)


def load_point_cloud(path) -> PointCloud:
    """Read a "lat lon z" text file; '#' starts a comment, blanks skipped."""
    lats, lons, zs = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise PointFileError(lineno, f"expected 3 fields, got {len(parts)}")
            try:
                lat, lon, z = (float(p) for p in parts)
            except ValueError:
                raise PointFileError(lineno, f"non-numeric field in {line!r}") from None
            if not -90 <= lat <= 90 or not -180 <= lon <= 180:
                raise PointFileError(lineno, f"coordinates out of range: {line!r}")
            lats.append(lat)
            lons.append(lon)
            zs.append(z)
    return PointCloud(np.array(lats), np.array(lons), np.array(zs))


def save_point_cloud(cloud: PointCloud, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lat, lon, z in zip(cloud.lats, cloud.lons, cloud.zs):
            fh.write(f"{float(lat)!r} {float(lon)!r} {float(z)!r}\n")


def save_height_grid(hg: HeightGrid, path) -> None:
    """Export heights as a TSV matrix of meters, row 0 first."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in hg.heights:
            fh.write("\t".join(repr(float(v)) for v in row) + "\n")


def load_height_grid(path, spec: GridSpec) -> HeightGrid:
    """Read a TSV height matrix; dimensions must match the grid spec."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append([float(v) for v in line.rstrip("\n").split("\t")])
    heights = np.array(rows) if rows else np.zeros((0, 0))
    return HeightGrid(spec, heights)
