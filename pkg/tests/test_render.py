import numpy as np
import pytest

from cityglow.geokey import BBox
from cityglow.gridmap import GridSpec, HeightGrid
from cityglow.ingest import TweetRecord
from cityglow.render import (
    Colormap,
    DEFAULT_STOPWORDS,
    DimensionMismatchError,
    FrameBuffer,
    SchemeConfig,
    animate,
    composite,
    density_counts,
    render_density,
    render_height,
    render_keyword,
    top_terms,
    write_ppm,
)
from helpers import make_record

BOX = BBox(42.350, 42.357, -71.099, -71.090)
SPEC = GridSpec(BOX, 7, 9)
BLUE_RED = Colormap((0, 0, 255), (255, 0, 0))
BLACK_WHITE = Colormap((0, 0, 0), (255, 255, 255))


def rec_at(i, lat, lon, ts=0, text="x"):
    return TweetRecord(f"r{i}", ts, lat, lon, "u", text)


# ---------------------------------------------------------------------------
# Height shading
# ---------------------------------------------------------------------------


def test_height_endpoints_exact():
    heights = np.zeros((7, 9))
    heights[2, 3] = 10.0
    frame = render_height(HeightGrid(SPEC, heights), BLUE_RED)
    assert frame.pixel(2, 3) == BLUE_RED.high
    assert frame.pixel(0, 0) == BLUE_RED.low


def test_height_half_max_rounds_half_away_per_channel():
    heights = np.zeros((7, 9))
    heights[2, 3] = 10.0
    heights[4, 4] = 5.0
    frame = render_height(HeightGrid(SPEC, heights), BLUE_RED)
    # rising channel 0+127.5 -> 128; falling channel 255-127.5 -> 127
    assert frame.pixel(4, 4) == (128, 0, 127)


def test_height_all_zero_grid_renders_low():
    frame = render_height(HeightGrid.flat(SPEC), BLUE_RED)
    assert frame.pixels == bytes(BLUE_RED.low) * (7 * 9)


# ---------------------------------------------------------------------------
# Density
# ---------------------------------------------------------------------------


def test_density_single_hot_cell():
    recs = [rec_at(i, 42.3505, -71.0985) for i in range(3)]
    frame = render_density(recs, SPEC, BLUE_RED)
    hot = frame.pixel(0, 0)
    assert hot == BLUE_RED.high
    assert frame.pixel(3, 3) == BLUE_RED.low


def test_density_no_records_uniform_low():
    frame = render_density([], SPEC, BLUE_RED)
    assert frame.pixels == bytes(BLUE_RED.low) * (7 * 9)


def test_density_counts_match_brute_force(rng):
    recs = [make_record(i, rng, on_grid=False) for i in range(500)]
    counts = density_counts(recs, SPEC)
    brute = np.zeros((7, 9), dtype=int)
    box = SPEC.bbox
    for r in recs:
        if not box.contains(r.lat, r.lon):
            continue
        row = min(int((r.lat - box.lat_min) / (box.lat_max - box.lat_min) * 7), 6)
        col = min(int((r.lon - box.lon_min) / (box.lon_max - box.lon_min) * 9), 8)
        brute[row, col] += 1
    assert np.array_equal(counts, brute)


def test_density_conservation(rng):
    recs = [
        make_record(i, rng, lat_range=(42.340, 42.367), lon_range=(-71.109, -71.080), on_grid=False)
        for i in range(500)
    ]
    in_box = sum(1 for r in recs if SPEC.bbox.contains(r.lat, r.lon))
    assert density_counts(recs, SPEC).sum() == in_box


def test_density_log_scale_monotone(rng):
    recs = [rec_at(i, 42.3505, -71.0985) for i in range(9)] + [rec_at(99, 42.3565, -71.0905)]
    lin = render_density(recs, SPEC, BLACK_WHITE, log_scale=False)
    log = render_density(recs, SPEC, BLACK_WHITE, log_scale=True)
    assert lin.pixel(0, 0) == (255, 255, 255) and log.pixel(0, 0) == (255, 255, 255)
    # low-count cell is brighter under the log scale
    assert log.pixel(6, 8) > lin.pixel(6, 8)


# ---------------------------------------------------------------------------
# Compositing and keyword overlay
# ---------------------------------------------------------------------------


def _solid(color, spec=SPEC):
    return FrameBuffer(spec.ncols, spec.nrows, bytes(color) * (spec.ncols * spec.nrows))


def test_composite_alpha_zero_is_base():
    base = _solid((10, 20, 30))
    overlay = _solid((200, 100, 0))
    assert composite(base, overlay, 0.0).pixels == base.pixels


def test_composite_alpha_one_is_overlay():
    base = _solid((10, 20, 30))
    overlay = _solid((200, 100, 0))
    assert composite(base, overlay, 1.0).pixels == overlay.pixels


def test_composite_half_black_white():
    out = composite(_solid((0, 0, 0)), _solid((255, 255, 255)), 0.5)
    assert out.pixels == bytes((128, 128, 128)) * (7 * 9)


def test_composite_dimension_mismatch():
    small = FrameBuffer(2, 2, bytes(12))
    with pytest.raises(DimensionMismatchError):
        composite(_solid((0, 0, 0)), small, 0.5)


def test_render_keyword_identities(rng):
    recs = [rec_at(i, 42.3505, -71.0985, text="mit hack") for i in range(5)]
    recs += [rec_at(9, 42.3565, -71.0905, text="charles river")]
    base = render_height(HeightGrid.flat(SPEC), BLACK_WHITE)
    at_zero = render_keyword(recs, "mit", SPEC, base, 0.0, BLACK_WHITE)
    assert at_zero.pixels == base.pixels
    overlay = render_density([r for r in recs if "mit" in r.text], SPEC, BLACK_WHITE)
    at_one = render_keyword(recs, "mit", SPEC, base, 1.0, BLACK_WHITE)
    assert at_one.pixels == overlay.pixels


def test_render_keyword_base_mismatch():
    base = FrameBuffer(3, 3, bytes(27))
    with pytest.raises(DimensionMismatchError):
        render_keyword([], "mit", SPEC, base, 0.5)


# ---------------------------------------------------------------------------
# Top terms
# ---------------------------------------------------------------------------


def test_top_terms_counts_and_tiebreak():
    recs = [
        rec_at(1, 42.3505, -71.0985, text="go tech"),
        rec_at(2, 42.3505, -71.0985, text="tech day"),
    ]
    grid = top_terms(recs, SPEC, 2, stopwords=frozenset())
    assert grid[0][0] == [("tech", 2), ("day", 1)]  # "day" beats "go" at count 1
    assert grid[3][3] == []


def test_top_terms_stopwords_removed():
    recs = [rec_at(1, 42.3505, -71.0985, text="the and of")]
    grid = top_terms(recs, SPEC, 3)
    assert grid[0][0] == []


def test_default_stopwords_is_fifty_words():
    assert len(DEFAULT_STOPWORDS) == 50


def test_top_terms_k_limits_output():
    recs = [rec_at(1, 42.3505, -71.0985, text="a1 b2 c3 d4 e5")]
    grid = top_terms(recs, SPEC, 2, stopwords=frozenset())
    assert len(grid[0][0]) == 2


# ---------------------------------------------------------------------------
# Animation
# ---------------------------------------------------------------------------


def test_animate_all_records_in_first_bin():
    recs = [rec_at(i, 42.3505, -71.0985, ts=5) for i in range(4)]
    frames = animate(recs, SPEC, 0, 100, 5, BLUE_RED)
    assert len(frames) == 5
    assert frames[0].pixel(0, 0) == BLUE_RED.high
    for frame in frames[1:]:
        assert frame.pixels == bytes(BLUE_RED.low) * (7 * 9)


def test_animate_partition_conservation(rng):
    recs = [make_record(i, rng, ts_range=(0, 1000)) for i in range(300)]
    t0, t1, bins = 100, 900, 7
    frames_counts = []
    for i in range(bins):
        # reconstruct each bin by the same public contract: edges are
        # t0 + i*(t1-t0)/bins, half-open except the last
        lo = t0 + (t1 - t0) * i / bins
        hi = t0 + (t1 - t0) * (i + 1) / bins
        if i == bins - 1:
            members = [r for r in recs if lo <= r.ts <= t1]
        else:
            members = [r for r in recs if lo <= r.ts < hi]
        frames_counts.append(len(members))
    in_window = sum(1 for r in recs if t0 <= r.ts <= t1)
    assert sum(frames_counts) == in_window  # bins partition the window
    # and each record falls in exactly one bin
    for r in recs:
        if t0 <= r.ts <= t1:
            hits = 0
            for i in range(bins):
                lo = t0 + (t1 - t0) * i / bins
                hi = t0 + (t1 - t0) * (i + 1) / bins
                if (i == bins - 1 and lo <= r.ts <= t1) or (i < bins - 1 and lo <= r.ts < hi):
                    hits += 1
            assert hits == 1


def test_animate_single_bin_equals_density(rng):
    recs = [make_record(i, rng, ts_range=(0, 1000)) for i in range(100)]
    window = [r for r in recs if 100 <= r.ts <= 900]
    [frame] = animate(recs, SPEC, 100, 900, 1, BLUE_RED)
    assert frame.pixels == render_density(window, SPEC, BLUE_RED).pixels


def test_animate_uses_global_normalization():
    # bin 0 has 1 record, bin 1 has 3: bin 0 renders dimmer, not full-bright
    recs = [rec_at(0, 42.3505, -71.0985, ts=0)]
    recs += [rec_at(i, 42.3505, -71.0985, ts=9) for i in range(1, 4)]
    frames = animate(recs, SPEC, 0, 10, 2, BLACK_WHITE)
    assert frames[1].pixel(0, 0) == (255, 255, 255)
    assert frames[0].pixel(0, 0) == (85, 85, 85)  # round(255/3)


def test_animate_validates_window():
    with pytest.raises(ValueError):
        animate([], SPEC, 10, 10, 2)
    with pytest.raises(ValueError):
        animate([], SPEC, 0, 10, 0)


# ---------------------------------------------------------------------------
# Frame plumbing
# ---------------------------------------------------------------------------


def test_frame_buffer_validates_size():
    with pytest.raises(ValueError):
        FrameBuffer(2, 2, bytes(5))


def test_scheme_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(mode="nope")
    with pytest.raises(ValueError):
        SchemeConfig(bins=0)
    with pytest.raises(ValueError):
        SchemeConfig(alpha=1.5)
    with pytest.raises(ValueError):
        SchemeConfig(t0=10, t1=5)


def test_write_ppm_golden(tmp_path):
    frame = FrameBuffer(2, 1, bytes((255, 0, 0, 0, 255, 0)))
    path = tmp_path / "f.ppm"
    write_ppm(frame, path)
    assert path.read_bytes() == b"P6\n2 1\n255\n" + bytes((255, 0, 0, 0, 255, 0))
