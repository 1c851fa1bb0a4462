"""Digit-interleaved latitude/longitude keys.

A key encodes one (lat, lon) pair as two sign characters followed by the
character-wise interleaving of the fixed-width decimal renderings of |lat|
and |lon|.  Because digits alternate between the two axes, lexicographic
order on keys is a Z-order (Morton) walk over the coordinate grid, so a
2-D bounding box becomes a single 1-D key range plus a post-filter.

Example with the default 2.3 format: (+42.350, -71.090) -> "+-4721..305900"
(lat digits "42.350" at even positions, lon digits "71.090" at odd ones;
the ".." is the interleaved pair of decimal points).
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP
from typing import NamedTuple


class GeoKeyError(ValueError):
    """Base class for key encoding/decoding failures."""


class OutOfRangeError(GeoKeyError):
    """Coordinate outside [-90, 90] lat / [-180, 180] lon."""


class WidthOverflowError(GeoKeyError):
    """Integer part of a coordinate does not fit the format width."""


class MalformedKeyError(GeoKeyError):
    """Key string violates the format's length or character classes."""


class QuadrantSplitError(GeoKeyError):
    """Bounding box spans lat=0 or lon=0 and must be split by the caller."""


@dataclass(frozen=True)
class GeoKeyFormat:
    """Fixed widths for one axis: integer digits and fractional digits.

    Both axes share the same widths; that is what makes digit-wise
    interleaving well defined.  A key encoded under one format is not
    comparable with keys of another format.
    """

    int_digits: int = 2
    frac_digits: int = 3

    def __post_init__(self) -> None:
        if self.int_digits < 1:
            raise ValueError("int_digits must be >= 1")
        if self.frac_digits < 0:
            raise ValueError("frac_digits must be >= 0")

    @property
    def axis_width(self) -> int:
        """Characters in one axis rendering, including the decimal point."""
        if self.frac_digits > 0:
            return self.int_digits + 1 + self.frac_digits
        return self.int_digits

    @property
    def key_length(self) -> int:
        """Total key length: two signs plus two interleaved axis strings."""
        return 2 + 2 * self.axis_width


DEFAULT_FORMAT = GeoKeyFormat()


@dataclass(frozen=True)
class BBox:
    """Geographic bounding box in degrees, all edges inclusive."""

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat_min <= 90.0 and -90.0 <= self.lat_max <= 90.0):
            raise OutOfRangeError(f"latitude bounds out of range: {self}")
        if not (-180.0 <= self.lon_min <= 180.0 and -180.0 <= self.lon_max <= 180.0):
            raise OutOfRangeError(f"longitude bounds out of range: {self}")
        if self.lat_min > self.lat_max or self.lon_min > self.lon_max:
            raise ValueError(f"bounds not ordered min <= max: {self}")

    @classmethod
    def normalized(cls, lat0: float, lat1: float, lon0: float, lon1: float) -> "BBox":
        """Build a box from two corners given in either order per axis."""
        return cls(min(lat0, lat1), max(lat0, lat1), min(lon0, lon1), max(lon0, lon1))

    def contains(self, lat: float, lon: float) -> bool:
        return (
            self.lat_min <= lat <= self.lat_max
            and self.lon_min <= lon <= self.lon_max
        )


class GeoKeyRange(NamedTuple):
    """Inclusive key range; start and end share the same sign prefix."""

    start: str
    end: str


def _sign_char(value: float) -> str:
    # Zero (and -0.0) canonicalizes to '+'.
    return "-" if value < 0 else "+"


def _axis_digits(magnitude: float, fmt: GeoKeyFormat) -> str:
    """Render a non-negative coordinate magnitude at fixed width.

    Rounds half away from zero to fmt.frac_digits, zero-pads the integer
    part to fmt.int_digits.  Raises WidthOverflowError if the rounded
    integer part needs more digits than the format allows.
    """
    quantum = Decimal(1).scaleb(-fmt.frac_digits)
    q = Decimal(magnitude).quantize(quantum, rounding=ROUND_HALF_UP)
    text = f"{q:.{fmt.frac_digits}f}" if fmt.frac_digits > 0 else f"{q:.0f}"
    int_len = text.index(".") if "." in text else len(text)
    if int_len > fmt.int_digits:
        raise WidthOverflowError(
            f"integer part of {magnitude!r} needs {int_len} digits, "
            f"format allows {fmt.int_digits}"
        )
    return text.zfill(fmt.axis_width)

def _interleave(a: str, b: str) -> str:
    return "".join(ca + cb for ca, cb in zip(a, b))


def _check_degrees(lat: float, lon: float) -> None:
    if not -90.0 <= lat <= 90.0:
        raise OutOfRangeError(f"latitude {lat!r} outside [-90, 90]")
    if not -180.0 <= lon <= 180.0:
        raise OutOfRangeError(f"longitude {lon!r} outside [-180, 180]")


def encode_latlon(lat: float, lon: float, fmt: GeoKeyFormat = DEFAULT_FORMAT) -> str:
    """Encode one coordinate pair as an interleaved key string."""
    _check_degrees(lat, lon)
    lat_s = _axis_digits(abs(lat), fmt)
    lon_s = _axis_digits(abs(lon), fmt)
    return _sign_char(lat) + _sign_char(lon) + _interleave(lat_s, lon_s)


def _split_key(key: str, fmt: GeoKeyFormat) -> tuple[str, str, str, str]:
    """Validate a key and return (lat_sign, lon_sign, lat_digits, lon_digits)."""
    if len(key) != fmt.key_length:
        raise MalformedKeyError(
            f"key {key!r} has length {len(key)}, format wants {fmt.key_length}"
        )
    sign_lat, sign_lon = key[0], key[1]
    if sign_lat not in "+-" or sign_lon not in "+-":
        raise MalformedKeyError(f"key {key!r} has a bad sign prefix")
    body = key[2:]
    lat_s, lon_s = body[0::2], body[1::2]
    for axis in (lat_s, lon_s):
        for i, ch in enumerate(axis):
            if fmt.frac_digits > 0 and i == fmt.int_digits:
                if ch != ".":
                    raise MalformedKeyError(
                        f"key {key!r}: expected decimal point at axis offset {i}"
                    )
            elif not ch.isdigit() or not ch.isascii():
                raise MalformedKeyError(f"key {key!r}: bad character {ch!r}")
    return sign_lat, sign_lon, lat_s, lon_s


def decode_latlon(key: str, fmt: GeoKeyFormat = DEFAULT_FORMAT) -> tuple[float, float]:
    """Inverse of encode_latlon up to the format's rounding."""
    sign_lat, sign_lon, lat_s, lon_s = _split_key(key, fmt)
    lat = float(lat_s) if sign_lat == "+" else -float(lat_s)
    lon = float(lon_s) if sign_lon == "+" else -float(lon_s)
    return lat, lon


def quadrant_signs(bbox: BBox) -> tuple[str, str]:
    """Sign prefix shared by every point of the box.

    Raises QuadrantSplitError when the box contains points on both sides
    of lat=0 or lon=0 (a point at exactly zero encodes as '+', so a box
    like [-5, 0] mixes '-' and '+' keys and cannot be one scan).
    """
    lat_sign = _sign_char(bbox.lat_min)
    lon_sign = _sign_char(bbox.lon_min)
    if lat_sign != _sign_char(bbox.lat_max) or lon_sign != _sign_char(bbox.lon_max):
        raise QuadrantSplitError(
            f"{bbox} crosses lat=0 or lon=0; split it into per-quadrant boxes"
        )
    return lat_sign, lon_sign


def box_range(
    bbox: BBox,
    fmt: GeoKeyFormat = DEFAULT_FORMAT,
    *,
    signs: tuple[str, str] | None = None,
) -> GeoKeyRange:
    """Inclusive key range whose scan is a superset of the box.

    Start interleaves the per-axis minimum magnitudes, end the maximums;
    on a negative axis keys order by magnitude, so the range covers the
    box with Z-order false positives in between (remove them with
    refine()).  `signs` overrides the quadrant check for callers that
    split a crossing box themselves and pin each piece's sign prefix.
    """
    if signs is None:
        signs = quadrant_signs(bbox)
    lat_lo, lat_hi = sorted((abs(bbox.lat_min), abs(bbox.lat_max)))
    lon_lo, lon_hi = sorted((abs(bbox.lon_min), abs(bbox.lon_max)))
    prefix = signs[0] + signs[1]
    start = prefix + _interleave(_axis_digits(lat_lo, fmt), _axis_digits(lon_lo, fmt))
    end = prefix + _interleave(_axis_digits(lat_hi, fmt), _axis_digits(lon_hi, fmt))
    return GeoKeyRange(start, end)


def refine(candidates, bbox: BBox, fmt: GeoKeyFormat = DEFAULT_FORMAT):
    """Drop Z-order false positives from a candidate scan.

    Takes (key, payload) pairs and keeps exactly those whose decoded
    coordinates fall inside the box.
    """
    kept = []
    for key, payload in candidates:
        lat, lon = decode_latlon(key, fmt)
        if bbox.contains(lat, lon):
            kept.append((key, payload))
    return kept
