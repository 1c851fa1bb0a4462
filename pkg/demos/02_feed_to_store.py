"""Feed ingestion and the exploded four-table store.

Run:  python3 demos/02_feed_to_store.py
Writes its store under demo_out/feed_to_store/.
"""

import pathlib
import random

from cityglow.ingest import ingest_stream, to_tsv
from cityglow.store import TABLE_DEGREE, TABLE_EDGE, TableSet
from synth import feed_lines

out = pathlib.Path("demo_out/feed_to_store")
out.mkdir(parents=True, exist_ok=True)

rng = random.Random(42)
feed = feed_lines(rng, n=2000)
(out / "feed.jsonl").write_text(feed, encoding="utf-8")

tables = TableSet.open(out / "store")
archive = open(out / "archive.tsv", "w", encoding="utf-8")


def sink(rec):
    archive.write(to_tsv(rec))
    tables.put_record(rec)


stats = ingest_stream(feed.splitlines(), sink)
archive.close()
print(f"ingested: {stats.as_dict()}")

# Every record explodes into presence cells, one column per field|value.
some_id = tables.record_ids()[0]
print(f"\ncolumns of record {some_id!r}:")
for cell in tables.scan_range(TABLE_EDGE, some_id, some_id):
    print(f"  {cell.col}")

# The degree table answers "how common is this value" without scanning.
print("\nbusiest users by degree:")
degrees = [
    (int(c.val), c.row)
    for c in tables.scan_range(TABLE_DEGREE, "user|", "user|\U0010ffff")
]
for count, col in sorted(degrees, reverse=True):
    print(f"  {col:<16} {count}")

top_words = sorted(
    (
        (int(c.val), c.row)
        for c in tables.scan_range(TABLE_DEGREE, "word|", "word|\U0010ffff")
    ),
    reverse=True,
)[:8]
print("\nmost indexed words:")
for count, col in top_words:
    print(f"  {col:<16} {count}")

tables.close()
print(f"\nstore persisted under {out / 'store'} (wal + numbered .seg files)")
