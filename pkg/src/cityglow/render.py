"""Frame rendering over the display grid.

Every renderer produces one pixel per grid cell, row-major RGB8, frame
row 0 being grid row 0 (the southern edge).  Pixel arithmetic rounds
half away from zero per channel and clamps to [0, 255]; color scales
interpolate per channel between the colormap's low and high endpoints.

Supported schemes: height shading, record density, keyword highlight
composited over a base frame, per-cell top-term labels, and time-binned
density animation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from cityglow.gridmap import GridSpec, HeightGrid, bin_indices
from cityglow.ingest import TweetRecord
from cityglow.store import token_set, tokenize


class DimensionMismatchError(ValueError):
    """Frame and grid dimensions disagree."""


@dataclass(frozen=True)
class Colormap:
    """Per-channel linear scale endpoints."""

    low: tuple[int, int, int]
    high: tuple[int, int, int]

    def __post_init__(self) -> None:
        for endpoint in (self.low, self.high):
            if len(endpoint) != 3 or any(not 0 <= v <= 255 for v in endpoint):
                raise ValueError(f"colormap endpoint out of RGB8 range: {endpoint}")


DEFAULT_COLORMAP = Colormap((0, 0, 64), (255, 255, 0))


def load_stopwords() -> frozenset[str]:
    text = resources.files("cityglow").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(w for w in text.split() if w)


DEFAULT_STOPWORDS = load_stopwords()


@dataclass(frozen=True)
class FrameBuffer:
    """Row-major RGB8 raster, one pixel per grid cell."""

    width: int
    height: int
    pixels: bytes
    seq: int = 0

    def __post_init__(self) -> None:
        if len(self.pixels) != self.width * self.height * 3:
            raise ValueError(
                f"pixel buffer has {len(self.pixels)} bytes, "
                f"expected {self.width * self.height * 3}"
            )

    def with_seq(self, seq: int) -> "FrameBuffer":
        return replace(self, seq=seq)

    def pixel(self, row: int, col: int) -> tuple[int, int, int]:
        i = (row * self.width + col) * 3
        return tuple(self.pixels[i : i + 3])


@dataclass(frozen=True)
class SchemeConfig:
    """One visualization scheme: what to draw and how to scale it."""

    mode: str = "height"
    keyword: str = ""
    t0: int | None = None
    t1: int | None = None
    bins: int = 10
    alpha: float = 0.5
    colormap: Colormap = DEFAULT_COLORMAP
    log_scale: bool = False

    MODES = ("height", "density", "keyword", "topics", "animate")

    def __post_init__(self) -> None:
        if self.mode not in self.MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.t0 is not None and self.t1 is not None and self.t0 > self.t1:
            raise ValueError(f"time window reversed: {self.t0} > {self.t1}")


def _round_half_away(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def _scale_frame(unit: np.ndarray, cmap: Colormap) -> FrameBuffer:
    """Map values in [0, 1] (nrows x ncols) through the colormap."""
    low = np.array(cmap.low, dtype=float)
    high = np.array(cmap.high, dtype=float)
    delta = unit[..., None] * (high - low)
    px = low + _round_half_away(delta)
    px = np.clip(px, 0, 255).astype(np.uint8)
    nrows, ncols = unit.shape
    return FrameBuffer(width=ncols, height=nrows, pixels=px.tobytes())


def render_height(hg: HeightGrid, cmap: Colormap = DEFAULT_COLORMAP) -> FrameBuffer:
    """Shade cells from cmap.low at height 0 to cmap.high at the max."""
    peak = float(hg.heights.max()) if hg.heights.size else 0.0
    unit = hg.heights / peak if peak > 0 else np.zeros_like(hg.heights)
    return _scale_frame(unit, cmap)


def density_counts(recs: list[TweetRecord], spec: GridSpec) -> np.ndarray:
    """Per-cell record counts; records outside the box do not bin."""
    counts = np.zeros((spec.nrows, spec.ncols), dtype=int)
    if not recs:
        return counts
    lats = np.array([r.lat for r in recs])
    lons = np.array([r.lon for r in recs])
    rows, cols, inside = bin_indices(lats, lons, spec)
    np.add.at(counts, (rows[inside], cols[inside]), 1)
    return counts


def _counts_to_unit(counts: np.ndarray, peak: int, log_scale: bool) -> np.ndarray:
    if peak <= 0:
        return np.zeros(counts.shape)
    if log_scale:
        return np.log1p(counts) / np.log1p(peak)
    return counts / peak


def render_density(
    recs: list[TweetRecord],
    spec: GridSpec,
    cmap: Colormap = DEFAULT_COLORMAP,
    log_scale: bool = False,
) -> FrameBuffer:
    """Color cells by how many records landed in them."""
    counts = density_counts(recs, spec)
    return _scale_frame(_counts_to_unit(counts, int(counts.max()), log_scale), cmap)


def composite(base: FrameBuffer, overlay: FrameBuffer, alpha: float) -> FrameBuffer:
    """Per-pixel blend: round((1-alpha)*base + alpha*overlay)."""
    if (base.width, base.height) != (overlay.width, overlay.height):
        raise DimensionMismatchError(
            f"base is {base.width}x{base.height}, overlay {overlay.width}x{overlay.height}"
        )
    b = np.frombuffer(base.pixels, dtype=np.uint8).astype(float)
    o = np.frombuffer(overlay.pixels, dtype=np.uint8).astype(float)
    px = np.clip(_round_half_away((1.0 - alpha) * b + alpha * o), 0, 255).astype(np.uint8)
    return FrameBuffer(width=base.width, height=base.height, pixels=px.tobytes())


def render_keyword(
    recs: list[TweetRecord],
    keyword: str,
    spec: GridSpec,
    base: FrameBuffer,
    alpha: float,
    cmap: Colormap = DEFAULT_COLORMAP,
    log_scale: bool = False,
) -> FrameBuffer:
    """Density of keyword-matching records composited over a base frame."""
    if (base.width, base.height) != (spec.ncols, spec.nrows):
        raise DimensionMismatchError(
            f"base is {base.width}x{base.height}, grid wants {spec.ncols}x{spec.nrows}"
        )
    needle = keyword.lower()
    matching = [r for r in recs if needle in token_set(r.text)]
    overlay = render_density(matching, spec, cmap, log_scale)
    return composite(base, overlay, alpha)


def top_terms(
    recs: list[TweetRecord],
    spec: GridSpec,
    k: int,
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
) -> list[list[list[tuple[str, int]]]]:
    """Per-cell top-k (term, count), ties broken alphabetically.

    Counts are token occurrences over the cell's records with stopwords
    removed; cells with no terms get empty lists.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    counters: dict[tuple[int, int], Counter] = {}
    lats = np.array([r.lat for r in recs])
    lons = np.array([r.lon for r in recs])
    if len(recs):
        rows, cols, inside = bin_indices(lats, lons, spec)
        for rec, row, col, ok in zip(recs, rows, cols, inside):
            if not ok:
                continue
            tokens = [t for t in tokenize(rec.text) if t not in stopwords]
            if tokens:
                counters.setdefault((int(row), int(col)), Counter()).update(tokens)
    grid: list[list[list[tuple[str, int]]]] = [
        [[] for _ in range(spec.ncols)] for _ in range(spec.nrows)
    ]
    for (row, col), counter in counters.items():
        ranked = sorted(counter.items(), key=lambda item: (-item[1], item[0]))
        grid[row][col] = ranked[:k]
    return grid


def _bin_index(ts: int, t0: int, t1: int, bins: int) -> int | None:
    """Which of the equal intervals over [t0, t1] holds this timestamp.

    Intervals are half-open except the last, which closes at t1; exact
    integer arithmetic so every in-window record lands in exactly one bin.
    """
    if ts < t0 or ts > t1:
        return None
    if ts == t1:
        return bins - 1
    return (ts - t0) * bins // (t1 - t0)


def animate(
    recs: list[TweetRecord],
    spec: GridSpec,
    t0: int,
    t1: int,
    bins: int,
    cmap: Colormap = DEFAULT_COLORMAP,
    log_scale: bool = False,
) -> list[FrameBuffer]:
    """Density frames over equal time slices of [t0, t1].

    Brightness is normalized by the global max count across all bins so
    frames are comparable.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if t0 >= t1:
        raise ValueError(f"animation window is empty: [{t0}, {t1}]")
    per_bin: list[list[TweetRecord]] = [[] for _ in range(bins)]
    for rec in recs:
        i = _bin_index(rec.ts, t0, t1, bins)
        if i is not None:
            per_bin[i].append(rec)
    count_grids = [density_counts(batch, spec) for batch in per_bin]
    peak = max((int(g.max()) for g in count_grids), default=0)
    return [_scale_frame(_counts_to_unit(g, peak, log_scale), cmap) for g in count_grids]


def write_ppm(frame: FrameBuffer, path) -> None:
    """Write one frame as a binary PPM (P6) image."""
    with open(path, "wb") as fh:
        fh.write(f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii"))
        fh.write(frame.pixels)
