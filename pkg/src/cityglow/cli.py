"""Batch driver for the pipeline: ingest, heightmap, query, render, serve.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from cityglow.assoc import query_bbox
from cityglow.defaults import DEFAULT_GRID
from cityglow.geokey import BBox, GeoKeyError
from cityglow.gridmap import (
    GridSpec,
    HeightGrid,
    PointFileError,
    build_height_grid,
    load_height_grid,
    load_point_cloud,
    save_height_grid,
)
from cityglow.ingest import MalformedLineError, ingest_stream, to_tsv
from cityglow.render import SchemeConfig, animate, render_density, render_height, render_keyword, write_ppm
from cityglow.service import HEIGHTMAP_FILENAME, ServerConfig, serve
from cityglow.store import StoreError, TableSet

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; this artifact reserves 2 for
    # data errors, so route usage failures to exit code 1.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cityglow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_ingest = sub.add_parser("ingest", help="parse a feed file, archive TSV, load the store")
    p_ingest.add_argument("feed", help="JSON-lines feed file")
    p_ingest.add_argument("--data", default="data", help="data directory (default: data)")
    p_ingest.add_argument("--archive", default=None, help="TSV archive path (default: <data>/archive.tsv)")

    p_height = sub.add_parser("heightmap", help="build the height grid from a point cloud")
    p_height.add_argument("pointcloud", help="lat lon z text file")
    p_height.add_argument("--data", default="data")
    p_height.add_argument("--grid", default=None, help="lat0,lat1,lon0,lon1,nrows,ncols")

    p_query = sub.add_parser("query", help="print matching records as TSV")
    p_query.add_argument("--bbox", required=True, help="lat0,lat1,lon0,lon1")
    p_query.add_argument("--from", dest="t0", type=int, default=None)
    p_query.add_argument("--to", dest="t1", type=int, default=None)
    p_query.add_argument("--keyword", default=None)
    p_query.add_argument("--data", default="data")

    p_render = sub.add_parser("render", help="write PPM frames for a scheme")
    p_render.add_argument("--mode", required=True, choices=SchemeConfig.MODES)
    p_render.add_argument("--out", required=True, help="output directory for .ppm frames")
    p_render.add_argument("--keyword", default="")
    p_render.add_argument("--from", dest="t0", type=int, default=None)
    p_render.add_argument("--to", dest="t1", type=int, default=None)
    p_render.add_argument("--bins", type=int, default=10)
    p_render.add_argument("--alpha", type=float, default=0.5)
    p_render.add_argument("--log-scale", action="store_true")
    p_render.add_argument("--grid", default=None, help="lat0,lat1,lon0,lon1,nrows,ncols")
    p_render.add_argument("--data", default="data")

    p_serve = sub.add_parser("serve", help="run the HTTP/WS service")
    p_serve.add_argument("--config", default=None, help="JSON config file")
    p_serve.add_argument("--data", default=None)
    p_serve.add_argument("--host", default=None)
    p_serve.add_argument("--port", type=int, default=None)

    return parser


def _parse_floats(raw: str, n: int, what: str) -> list[float]:
    parts = raw.split(",")
    if len(parts) != n:
        raise ValueError(f"{what} wants {n} comma-separated values, got {len(parts)}")
    return [float(p) for p in parts]


def _cmd_ingest(args) -> int:
    data_dir = Path(args.data)
    data_dir.mkdir(parents=True, exist_ok=True)
    archive_path = Path(args.archive) if args.archive else data_dir / "archive.tsv"
    try:
        feed = open(args.feed, "r", encoding="utf-8")
    except OSError as exc:
        print(f"cannot open feed: {exc}", file=sys.stderr)
        return DATA_ERROR
    with feed, TableSet.open(data_dir / "store") as tables, open(
        archive_path, "a", encoding="utf-8"
    ) as archive:

        def sink(rec):
            archive.write(to_tsv(rec))
            tables.put_record(rec)

        stats = ingest_stream(feed, sink)
    print(
        f"lines={stats.lines_read} kept={stats.records_kept} "
        f"no_geo={stats.records_dropped_no_geo} malformed={stats.records_dropped_malformed}"
    )
    return 0


def _parse_grid(raw: str | None) -> GridSpec:
    if not raw:
        return DEFAULT_GRID
    values = raw.split(",")
    if len(values) != 6:
        raise ValueError(f"--grid wants 6 comma-separated values, got {len(values)}")
    lat0, lat1, lon0, lon1 = (float(v) for v in values[:4])
    return GridSpec(BBox.normalized(lat0, lat1, lon0, lon1), int(values[4]), int(values[5]))


def _cmd_heightmap(args) -> int:
    data_dir = Path(args.data)
    data_dir.mkdir(parents=True, exist_ok=True)
    try:
        spec = _parse_grid(args.grid)
    except ValueError as exc:
        print(f"bad --grid: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        cloud = load_point_cloud(args.pointcloud)
    except (OSError, PointFileError) as exc:
        print(f"cannot load point cloud: {exc}", file=sys.stderr)
        return DATA_ERROR
    hg = build_height_grid(cloud, spec)
    out = data_dir / HEIGHTMAP_FILENAME
    save_height_grid(hg, out)
    print(f"wrote {out} ({spec.nrows}x{spec.ncols}, {len(cloud)} points)")
    return 0


def _cmd_query(args) -> int:
    try:
        lat0, lat1, lon0, lon1 = _parse_floats(args.bbox, 4, "--bbox")
        bbox = BBox.normalized(lat0, lat1, lon0, lon1)
    except (ValueError, GeoKeyError) as exc:
        print(f"bad --bbox: {exc}", file=sys.stderr)
        return USAGE_ERROR
    store_dir = Path(args.data) / "store"
    if not store_dir.exists():
        print(f"no store at {store_dir}", file=sys.stderr)
        return DATA_ERROR
    try:
        with TableSet.open(store_dir) as tables:
            records = query_bbox(tables, bbox, args.t0, args.t1, args.keyword)
    except (StoreError, ValueError) as exc:
        print(f"query failed: {exc}", file=sys.stderr)
        return DATA_ERROR
    for rec in records:
        sys.stdout.write(to_tsv(rec))
    return 0


def _cmd_render(args) -> int:
    data_dir = Path(args.data)
    store_dir = data_dir / "store"
    if not store_dir.exists():
        print(f"no store at {store_dir}", file=sys.stderr)
        return DATA_ERROR
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        spec = _parse_grid(args.grid)
    except ValueError as exc:
        print(f"bad --grid: {exc}", file=sys.stderr)
        return USAGE_ERROR
    heightmap_path = data_dir / HEIGHTMAP_FILENAME
    try:
        with TableSet.open(store_dir) as tables:
            records = query_bbox(tables, spec.bbox, args.t0, args.t1)
        hg = (
            load_height_grid(heightmap_path, spec)
            if heightmap_path.exists()
            else None
        )
    except (StoreError, MalformedLineError, ValueError) as exc:
        print(f"render failed: {exc}", file=sys.stderr)
        return DATA_ERROR

    hg = hg or HeightGrid.flat(spec)
    if args.mode == "height":
        frames = [render_height(hg)]
    elif args.mode in ("density", "topics"):
        frames = [render_density(records, spec, log_scale=args.log_scale)]
    elif args.mode == "keyword":
        base = render_height(hg)
        frames = [render_keyword(records, args.keyword, spec, base, args.alpha, log_scale=args.log_scale)]
    else:  # animate
        ts_values = [r.ts for r in records]
        t0 = args.t0 if args.t0 is not None else min(ts_values, default=0)
        t1 = args.t1 if args.t1 is not None else max(ts_values, default=0)
        if t0 >= t1:
            t1 = t0 + 1
        frames = animate(records, spec, t0, t1, args.bins, log_scale=args.log_scale)
    for i, frame in enumerate(frames):
        write_ppm(frame, out_dir / f"frame_{i:04d}.ppm")
    print(f"wrote {len(frames)} frame(s) to {out_dir}")
    return 0


def _cmd_serve(args) -> int:
    try:
        config = ServerConfig.from_file(args.config) if args.config else ServerConfig()
        overrides = {}
        if args.data is not None:
            overrides["data_dir"] = args.data
        if args.host is not None:
            overrides["host"] = args.host
        if args.port is not None:
            overrides["port"] = args.port
        if overrides:
            import dataclasses

            config = dataclasses.replace(config, **overrides)
    except (OSError, ValueError, KeyError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return DATA_ERROR
    serve(config)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    handlers = {
        "ingest": _cmd_ingest,
        "heightmap": _cmd_heightmap,
        "query": _cmd_query,
        "render": _cmd_render,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except (StoreError, MalformedLineError, PointFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
