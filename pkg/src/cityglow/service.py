"""HTTP/WebSocket front door.

One server owns one store, one height grid and one active scheme (the
physical display has a single projector).  A render loop produces a
frame every period and broadcasts it to every /api/frames subscriber;
slow subscribers drop oldest frames but never see reordering.  All query
endpoints are thin wrappers over the library calls and add no filtering
of their own.
"""

from __future__ import annotations

import asyncio
import base64
import contextlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, Query, Request
from fastapi.websockets import WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field, model_validator

from cityglow.assoc import query_bbox
from cityglow.defaults import DEFAULT_GRID, DEFAULT_KEY_FORMAT
from cityglow.geokey import BBox, GeoKeyFormat
from cityglow.gridmap import GridSpec, HeightGrid, load_height_grid
from cityglow.ingest import IngestStats, TweetRecord, ingest_stream
from cityglow.render import (
    Colormap,
    FrameBuffer,
    SchemeConfig,
    render_density,
    render_height,
    render_keyword,
    animate,
    top_terms,
)
from cityglow.store import TableSet

HEIGHTMAP_FILENAME = "heightmap.tsv"


@dataclass(frozen=True)
class ServerConfig:
    """Everything the server needs; mirror of the JSON config file."""

    host: str = "127.0.0.1"
    port: int = 8000
    data_dir: str = "data"
    grid: GridSpec = DEFAULT_GRID
    key_format: GeoKeyFormat = DEFAULT_KEY_FORMAT
    frame_period_ms: int = 100
    feed_path: str | None = None

    def __post_init__(self) -> None:
        if self.frame_period_ms < 10:
            raise ValueError("frame period must be >= 10 ms")

    @classmethod
    def from_dict(cls, raw: dict) -> "ServerConfig":
        kwargs = dict(raw)
        if "grid" in kwargs:
            g = kwargs["grid"]
            bbox = BBox(g["lat_min"], g["lat_max"], g["lon_min"], g["lon_max"])
            kwargs["grid"] = GridSpec(bbox, g["nrows"], g["ncols"])
        if "key_format" in kwargs:
            f = kwargs["key_format"]
            kwargs["key_format"] = GeoKeyFormat(f["int_digits"], f["frac_digits"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "ServerConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        box = self.grid.bbox
        return {
            "host": self.host,
            "port": self.port,
            "data_dir": self.data_dir,
            "grid": {
                "lat_min": box.lat_min,
                "lat_max": box.lat_max,
                "lon_min": box.lon_min,
                "lon_max": box.lon_max,
                "nrows": self.grid.nrows,
                "ncols": self.grid.ncols,
            },
            "key_format": {
                "int_digits": self.key_format.int_digits,
                "frac_digits": self.key_format.frac_digits,
            },
            "frame_period_ms": self.frame_period_ms,
            "feed_path": self.feed_path,
        }


# -- wire models -------------------------------------------------------------


class ColormapModel(BaseModel):
    low: tuple[int, int, int] = (0, 0, 64)
    high: tuple[int, int, int] = (255, 255, 0)

    @model_validator(mode="after")
    def _in_range(self):
        for endpoint in (self.low, self.high):
            if any(not 0 <= v <= 255 for v in endpoint):
                raise ValueError(f"colormap endpoint out of RGB8 range: {endpoint}")
        return self


class SchemeModel(BaseModel):
    mode: Literal["height", "density", "keyword", "topics", "animate"] = "height"
    keyword: str = ""
    t0: Optional[int] = None
    t1: Optional[int] = None
    bins: int = Field(default=10, ge=1)
    alpha: float = Field(default=0.5, ge=0.0, le=1.0)
    colormap: ColormapModel = ColormapModel()
    log_scale: bool = False

    @model_validator(mode="after")
    def _window_ordered(self):
        if self.t0 is not None and self.t1 is not None and self.t0 > self.t1:
            raise ValueError(f"time window reversed: {self.t0} > {self.t1}")
        return self

    def to_scheme(self) -> SchemeConfig:
        return SchemeConfig(
            mode=self.mode,
            keyword=self.keyword,
            t0=self.t0,
            t1=self.t1,
            bins=self.bins,
            alpha=self.alpha,
            colormap=Colormap(tuple(self.colormap.low), tuple(self.colormap.high)),
            log_scale=self.log_scale,
        )

    @classmethod
    def from_scheme(cls, s: SchemeConfig) -> "SchemeModel":
        return cls(
            mode=s.mode,
            keyword=s.keyword,
            t0=s.t0,
            t1=s.t1,
            bins=s.bins,
            alpha=s.alpha,
            colormap=ColormapModel(low=s.colormap.low, high=s.colormap.high),
            log_scale=s.log_scale,
        )


def record_to_dict(rec: TweetRecord) -> dict:
    return {
        "id": rec.id,
        "ts": rec.ts,
        "lat": rec.lat,
        "lon": rec.lon,
        "user": rec.user,
        "text": rec.text,
    }


def frame_message(frame: FrameBuffer) -> dict:
    return {
        "seq": frame.seq,
        "w": frame.width,
        "h": frame.height,
        "pix": base64.b64encode(frame.pixels).decode("ascii"),
    }


# -- server state ------------------------------------------------------------


class ServerState:
    """Store, height grid, active scheme and the frame fan-out."""

    def __init__(self, config: ServerConfig, tables: TableSet, heightmap: HeightGrid | None):
        self.config = config
        self.tables = tables
        self.heightmap = heightmap or HeightGrid.flat(config.grid)
        self.scheme: SchemeConfig = SchemeConfig()
        self.ingest_totals = IngestStats()
        self.subscribers: set[asyncio.Queue] = set()
        self._seq = 0
        self._anim_pos = 0
        self._frames_key: tuple | None = None
        self._frames: list[FrameBuffer] = []
        self._records_key: tuple | None = None
        self._records: list[TweetRecord] = []

    # Renders are pure; the cache only skips identical work between ticks.
    def _window_records(self, t0: int | None, t1: int | None) -> list[TweetRecord]:
        key = (t0, t1, self.tables.store.mutation_count)
        if key != self._records_key:
            self._records = query_bbox(self.tables, self.config.grid.bbox, t0, t1)
            self._records_key = key
        return self._records

    def scheme_frames(self, scheme: SchemeConfig) -> list[FrameBuffer]:
        key = (scheme, self.tables.store.mutation_count)
        if key == self._frames_key:
            return self._frames
        grid = self.config.grid
        cmap = scheme.colormap
        if scheme.mode == "height":
            frames = [render_height(self.heightmap, cmap)]
        elif scheme.mode in ("density", "topics"):
            recs = self._window_records(scheme.t0, scheme.t1)
            frames = [render_density(recs, grid, cmap, scheme.log_scale)]
        elif scheme.mode == "keyword":
            recs = self._window_records(scheme.t0, scheme.t1)
            base = render_height(self.heightmap, cmap)
            frames = [
                render_keyword(recs, scheme.keyword, grid, base, scheme.alpha, cmap, scheme.log_scale)
            ]
        elif scheme.mode == "animate":
            recs = self._window_records(scheme.t0, scheme.t1)
            if scheme.t0 is None or scheme.t1 is None or scheme.t0 >= scheme.t1:
                ts_values = [r.ts for r in recs]
                t0 = min(ts_values, default=0)
                t1 = max(ts_values, default=0)
                if t0 >= t1:
                    t1 = t0 + 1
            else:
                t0, t1 = scheme.t0, scheme.t1
            frames = animate(recs, grid, t0, t1, scheme.bins, cmap, scheme.log_scale)
        else:  # pragma: no cover - SchemeConfig rejects unknown modes
            raise ValueError(f"unknown mode {scheme.mode!r}")
        self._frames_key = key
        self._frames = frames
        return frames

    def next_frame(self) -> FrameBuffer:
        """Render one tick of the active scheme; called from the loop only."""
        scheme = self.scheme
        frames = self.scheme_frames(scheme)
        if scheme.mode == "animate" and len(frames) > 1:
            frame = frames[self._anim_pos % len(frames)]
            self._anim_pos += 1
        else:
            frame = frames[0]
        self._seq += 1
        return frame.with_seq(self._seq)

    def broadcast(self, frame: FrameBuffer) -> None:
        for queue in self.subscribers:
            if queue.full():
                with contextlib.suppress(asyncio.QueueEmpty):
                    queue.get_nowait()  # drop oldest; a display wants the newest
            queue.put_nowait(frame)

    def set_scheme(self, scheme: SchemeConfig) -> None:
        self.scheme = scheme
        self._anim_pos = 0


async def _frame_loop(state: ServerState) -> None:
    period = state.config.frame_period_ms / 1000.0
    while True:
        # No awaits between scheme read and broadcast: a frame never mixes
        # two configurations, and anything enqueued after a scheme PUT
        # returns was rendered under the new scheme.
        try:
            frame = state.next_frame()
            state.broadcast(frame)
        except Exception:  # keep the display alive over transient errors
            pass
        await asyncio.sleep(period)


def load_server_state(config: ServerConfig) -> ServerState:
    data_dir = Path(config.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    tables = TableSet.open(data_dir / "store", fmt=config.key_format)
    heightmap_path = data_dir / HEIGHTMAP_FILENAME
    heightmap = load_height_grid(heightmap_path, config.grid) if heightmap_path.exists() else None
    state = ServerState(config, tables, heightmap)
    if config.feed_path:
        with open(config.feed_path, "r", encoding="utf-8") as fh:
            stats = ingest_stream(fh, tables.put_record)
        state.ingest_totals.add(stats)
    return state


def create_app(config: ServerConfig | None = None, state: ServerState | None = None) -> FastAPI:
    """Build the ASGI app; pass a prebuilt state to reuse open tables."""
    if state is None:
        state = load_server_state(config or ServerConfig())

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(_frame_loop(state))
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    app = FastAPI(lifespan=lifespan)
    app.state.ctx = state

    @app.post("/api/ingest")
    async def ingest(request: Request) -> dict:
        body = (await request.body()).decode("utf-8")
        lines = body.splitlines()
        stats = ingest_stream(lines, state.tables.put_record)
        state.ingest_totals.add(stats)
        return stats.as_dict()

    @app.get("/api/tweets")
    def tweets(
        lat0: float,
        lat1: float,
        lon0: float,
        lon1: float,
        t0: Optional[int] = Query(default=None, alias="from"),
        t1: Optional[int] = Query(default=None, alias="to"),
        q: Optional[str] = None,
    ) -> list[dict]:
        bbox = BBox.normalized(lat0, lat1, lon0, lon1)
        records = query_bbox(state.tables, bbox, t0, t1, q)
        return [record_to_dict(r) for r in records]

    @app.get("/api/heightmap")
    def heightmap() -> dict:
        hg = state.heightmap
        box = hg.spec.bbox
        return {
            "nrows": hg.spec.nrows,
            "ncols": hg.spec.ncols,
            "bbox": {
                "lat_min": box.lat_min,
                "lat_max": box.lat_max,
                "lon_min": box.lon_min,
                "lon_max": box.lon_max,
            },
            "heights": [float(v) for v in hg.heights.ravel()],
        }

    @app.get("/api/scheme")
    def get_scheme() -> SchemeModel:
        return SchemeModel.from_scheme(state.scheme)

    @app.put("/api/scheme")
    def put_scheme(model: SchemeModel) -> SchemeModel:
        state.set_scheme(model.to_scheme())
        return SchemeModel.from_scheme(state.scheme)

    @app.get("/api/topics")
    def topics(k: int = Query(default=5, ge=1)) -> dict:
        scheme = state.scheme
        records = state._window_records(scheme.t0, scheme.t1)
        grid = top_terms(records, state.config.grid, k)
        cells = []
        for row, row_terms in enumerate(grid):
            for col, terms in enumerate(row_terms):
                if terms:
                    cells.append({"row": row, "col": col, "terms": [[t, n] for t, n in terms]})
        return {"k": k, "nrows": state.config.grid.nrows, "ncols": state.config.grid.ncols, "cells": cells}

    @app.get("/api/stats")
    def stats() -> dict:
        return {
            "ingest": state.ingest_totals.as_dict(),
            "store": state.tables.stats().as_dict(),
        }

    @app.websocket("/api/frames")
    async def frames(ws: WebSocket) -> None:
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue(maxsize=4)
        state.subscribers.add(queue)
        try:
            while True:
                frame: FrameBuffer = await queue.get()
                await ws.send_json(frame_message(frame))
        except WebSocketDisconnect:
            pass
        finally:
            state.subscribers.discard(queue)

    return app


def serve(config: ServerConfig) -> None:
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
