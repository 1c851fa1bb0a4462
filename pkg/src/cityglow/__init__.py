"""cityglow: light up a city-scale display grid with geo-tagged posts.

The pieces, bottom to top: interleaved lat/lon keys (geokey), feed parsing
and TSV archival (ingest), an embedded sorted store with the exploded
four-table layout (store), box/keyword/time queries over it (assoc),
height grids from point clouds (gridmap), frame rendering (render), and
the HTTP/WebSocket front door plus CLI (service, cli).
"""

from cityglow.geokey import (
    BBox,
    GeoKeyFormat,
    GeoKeyRange,
    DEFAULT_FORMAT,
    encode_latlon,
    decode_latlon,
    box_range,
    refine,
)
from cityglow.ingest import TweetRecord, IngestStats, parse_feed_line, to_tsv, from_tsv, ingest_stream
from cityglow.store import SortedStore, TableSet, Cell, tokenize
from cityglow.assoc import AssocArray, select_cols, extract_tweets, query_bbox
from cityglow.gridmap import GridSpec, HeightGrid, PointCloud, align, build_height_grid, load_point_cloud
from cityglow.render import (
    Colormap,
    FrameBuffer,
    SchemeConfig,
    render_height,
    render_density,
    render_keyword,
    top_terms,
    animate,
    write_ppm,
)

__version__ = "0.1.0"
