"""Independent oracles shared across test modules.

These deliberately avoid the library's own code paths: rounding goes
through exact Fraction arithmetic, records are built straight from
constructor arguments.
"""

import math
import random
from fractions import Fraction

from cityglow.ingest import TweetRecord


def round_away(x: float, digits: int) -> float:
    """Decimal rounding, half away from zero, exact via Fraction."""
    scale = 10 ** digits
    m = Fraction(abs(x)) * scale
    n = math.floor(m)
    if m - n >= Fraction(1, 2):
        n += 1
    value = n / scale
    return -value if x < 0 else value


def milli(rng: random.Random, lo: float, hi: float) -> float:
    """Random coordinate on the exact 3-decimal grid."""
    return rng.randint(round(lo * 1000), round(hi * 1000)) / 1000


WORDS = (
    "mit", "campus", "river", "dome", "class", "tech", "bridge", "lab",
    "coffee", "game", "storm", "music", "boston", "hack", "train", "summer",
)


def make_record(
    i: int,
    rng: random.Random,
    lat_range=(42.350, 42.357),
    lon_range=(-71.099, -71.090),
    ts_range=(1_388_534_400, 1_388_620_800),
    on_grid: bool = True,
) -> TweetRecord:
    if on_grid:
        lat = milli(rng, *lat_range)
        lon = milli(rng, *lon_range)
    else:
        lat = rng.uniform(*lat_range)
        lon = rng.uniform(*lon_range)
    return TweetRecord(
        id=f"t{i}",
        ts=rng.randint(*ts_range),
        lat=lat,
        lon=lon,
        user=rng.choice(("alice", "bob", "carol", "dan")),
        text=" ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 8))),
    )
