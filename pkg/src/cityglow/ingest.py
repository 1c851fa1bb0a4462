"""Feed parsing and the canonical TSV form.

The raw feed is JSON lines, one object per line:

    {"id": str, "ts": int, "user": str, "text": str, "geo": [lon, lat] | null}

Note the GeoJSON-style [lon, lat] order in the feed; records store
(lat, lon).  Lines without coordinates are dropped (counted), malformed
lines are dropped (counted), and parsing never aborts the stream.

The TSV form is six tab-separated fields per line, newline terminated:
id, timestamp, lat, lon, user, text.  Tabs, newlines, carriage returns
and backslashes inside user/text are escaped as \\t, \\n, \\r, \\\\.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Union


class MalformedLineError(ValueError):
    """A TSV line that does not follow the six-field escaped grammar."""


@dataclass(frozen=True)
class TweetRecord:
    """One geo-tagged post."""

    id: str
    ts: int
    lat: float
    lon: float
    user: str
    text: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("record id must be non-empty")
        if any(c in self.id for c in "\t\n\r"):
            raise ValueError("record id must not contain tabs or newlines")
        if not isinstance(self.ts, int) or isinstance(self.ts, bool):
            raise ValueError(f"timestamp must be an integer, got {self.ts!r}")
        if not (isinstance(self.lat, (int, float)) and math.isfinite(self.lat)):
            raise ValueError(f"latitude must be finite, got {self.lat!r}")
        if not (isinstance(self.lon, (int, float)) and math.isfinite(self.lon)):
            raise ValueError(f"longitude must be finite, got {self.lon!r}")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat!r} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon!r} outside [-180, 180]")


class ParseOutcome(enum.Enum):
    """Tagged results for feed lines that do not yield a record."""

    NO_GEO = "no_geo"
    MALFORMED = "malformed"


@dataclass
class IngestStats:
    """Counters for one ingest pass; lines_read is the sum of the others."""

    lines_read: int = 0
    records_kept: int = 0
    records_dropped_no_geo: int = 0
    records_dropped_malformed: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "lines_read": self.lines_read,
            "records_kept": self.records_kept,
            "records_dropped_no_geo": self.records_dropped_no_geo,
            "records_dropped_malformed": self.records_dropped_malformed,
        }

    def add(self, other: "IngestStats") -> None:
        self.lines_read += other.lines_read
        self.records_kept += other.records_kept
        self.records_dropped_no_geo += other.records_dropped_no_geo
        self.records_dropped_malformed += other.records_dropped_malformed


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def parse_feed_line(line: str) -> Union[TweetRecord, ParseOutcome]:
    """Parse one feed line into a record, NO_GEO, or MALFORMED."""
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError):
        return ParseOutcome.MALFORMED
    if not isinstance(obj, dict):
        return ParseOutcome.MALFORMED

    rec_id = obj.get("id")
    ts = obj.get("ts")
    user = obj.get("user")
    text = obj.get("text")
    if not isinstance(rec_id, str) or not isinstance(user, str) or not isinstance(text, str):
        return ParseOutcome.MALFORMED
    if not isinstance(ts, int) or isinstance(ts, bool):
        return ParseOutcome.MALFORMED

    geo = obj.get("geo")
    if geo is None:
        return ParseOutcome.NO_GEO
    if not (isinstance(geo, list) and len(geo) == 2 and all(_is_number(v) for v in geo)):
        return ParseOutcome.MALFORMED
    lon, lat = geo  # feed order is [lon, lat]
    try:
        return TweetRecord(id=rec_id, ts=ts, lat=float(lat), lon=float(lon), user=user, text=text)
    except ValueError:
        return ParseOutcome.MALFORMED


_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def escape_field(s: str) -> str:
    """Escape tabs, newlines, carriage returns and backslashes."""
    s = s.replace("\\", "\\\\")
    return s.replace("\t", "\\t").replace("\n", "\\n").replace("\r", "\\r")


def unescape_field(s: str) -> str:
    out = []
    i = 0
    while i < len(s):
        c = s[i]
        if c == "\\":
            if i + 1 >= len(s):
                raise MalformedLineError("dangling backslash at end of field")
            sub = _UNESCAPES.get(s[i + 1])
            if sub is None:
                raise MalformedLineError(f"bad escape sequence \\{s[i + 1]!r}")
            out.append(sub)
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def to_tsv(rec: TweetRecord, frac_digits: int = 3) -> str:
    """Serialize a record as one escaped, newline-terminated TSV line."""
    return "\t".join(
        (
            rec.id,
            str(rec.ts),
            f"{rec.lat:.{frac_digits}f}",
            f"{rec.lon:.{frac_digits}f}",
            escape_field(rec.user),
            escape_field(rec.text),
        )
    ) + "\n"


def from_tsv(line: str) -> TweetRecord:
    """Inverse of to_tsv; raises MalformedLineError on grammar violations."""
    if line.endswith("\n"):
        line = line[:-1]
    if not line:
        raise MalformedLineError("empty line")
    fields = line.split("\t")
    if len(fields) != 6:
        raise MalformedLineError(f"expected 6 fields, got {len(fields)}")
    raw_id, raw_ts, raw_lat, raw_lon, raw_user, raw_text = fields
    try:
        ts = int(raw_ts)
        lat = float(raw_lat)
        lon = float(raw_lon)
    except ValueError as exc:
        raise MalformedLineError(f"bad numeric field: {exc}") from exc
    try:
        return TweetRecord(
            id=raw_id,
            ts=ts,
            lat=lat,
            lon=lon,
            user=unescape_field(raw_user),
            text=unescape_field(raw_text),
        )
    except ValueError as exc:
        raise MalformedLineError(str(exc)) from exc


def ingest_stream(
    source: Iterable[str],
    sink: Callable[[TweetRecord], None],
) -> IngestStats:
    """Run every line through parse_feed_line, forwarding kept records.

    Records reach the sink in input order.  Sink exceptions propagate;
    parse failures only bump counters.
    """
    stats = IngestStats()
    for line in source:
        stats.lines_read += 1
        result = parse_feed_line(line)
        if isinstance(result, TweetRecord):
            sink(result)
            stats.records_kept += 1
        elif result is ParseOutcome.NO_GEO:
            stats.records_dropped_no_geo += 1
        else:
            stats.records_dropped_malformed += 1
    return stats
