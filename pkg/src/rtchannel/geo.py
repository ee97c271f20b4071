"""Geodetic -> UTM -> scene-local coordinate conversion.

Forward projection uses the Krueger series for the transverse Mercator
(6th order in the third flattening), which is accurate to a few nanometres
within a UTM zone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

# WGS84
A = 6378137.0
F = 1 / 298.257223563
K0 = 0.9996
FALSE_EASTING = 500000.0
FALSE_NORTHING_SOUTH = 10000000.0

_N = F / (2 - F)
_N2, _N3, _N4, _N5, _N6 = (_N ** k for k in range(2, 7))

# rectifying radius
_A_RECT = A / (1 + _N) * (1 + _N2 / 4 + _N4 / 64 + _N6 / 256)

_ALPHA = (
    _N / 2 - 2 * _N2 / 3 + 5 * _N3 / 16 + 41 * _N4 / 180 - 127 * _N5 / 288 + 7891 * _N6 / 37800,
    13 * _N2 / 48 - 3 * _N3 / 5 + 557 * _N4 / 1440 + 281 * _N5 / 630 - 1983433 * _N6 / 1935360,
    61 * _N3 / 240 - 103 * _N4 / 140 + 15061 * _N5 / 26880 + 167603 * _N6 / 181440,
    49561 * _N4 / 161280 - 179 * _N5 / 168 + 6601661 * _N6 / 7257600,
    34729 * _N5 / 80640 - 3418889 * _N6 / 1995840,
    212378941 * _N6 / 319334400,
)

_E = math.sqrt(F * (2 - F))


class GeoDomainError(ValueError):
    """Coordinates outside the supported domain."""


@dataclass(frozen=True)
class GeodeticPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise GeoDomainError(f"latitude out of range: {self.lat}")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise GeoDomainError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class UtmPoint:
    easting: float
    northing: float
    zone: int
    hemisphere: str  # "N" or "S"

    def __post_init__(self):
        if not 1 <= self.zone <= 60:
            raise GeoDomainError(f"UTM zone out of range: {self.zone}")
        if self.hemisphere not in ("N", "S"):
            raise GeoDomainError(f"hemisphere must be 'N' or 'S', got {self.hemisphere!r}")


@dataclass(frozen=True)
class LocalPoint:
    x: float
    y: float
    z: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


def zone_number(lon: float) -> int:
    return min(int(math.floor(lon / 6.0)) + 31, 60)


def central_meridian(zone: int) -> float:
    return 6.0 * zone - 183.0


def geodetic_to_utm(p: GeodeticPoint) -> UtmPoint:
    if abs(p.lat) > 84.0:
        raise GeoDomainError(f"UTM undefined beyond 84 degrees latitude: {p.lat}")
    zone = zone_number(p.lon)
    phi = math.radians(p.lat)
    lam = math.radians(p.lon - central_meridian(zone))

    # conformal latitude via tau' (Karney 2011)
    tau = math.tan(phi)
    sigma = math.sinh(_E * math.atanh(_E * tau / math.hypot(1.0, tau)))
    tau_c = tau * math.hypot(1.0, sigma) - sigma * math.hypot(1.0, tau)

    xi_p = math.atan2(tau_c, math.cos(lam))
    eta_p = math.asinh(math.sin(lam) / math.hypot(tau_c, math.cos(lam)))

    xi, eta = xi_p, eta_p
    for j, a in enumerate(_ALPHA, start=1):
        xi += a * math.sin(2 * j * xi_p) * math.cosh(2 * j * eta_p)
        eta += a * math.cos(2 * j * xi_p) * math.sinh(2 * j * eta_p)

    easting = FALSE_EASTING + K0 * _A_RECT * eta
    northing = K0 * _A_RECT * xi
    hemisphere = "N" if p.lat >= 0 else "S"
    if hemisphere == "S":
        northing += FALSE_NORTHING_SOUTH
    return UtmPoint(easting, northing, zone, hemisphere)


def _check_same_zone(p: UtmPoint, origin: UtmPoint) -> None:
    if p.zone != origin.zone or p.hemisphere != origin.hemisphere:
        raise GeoDomainError(
            f"zone mismatch: point in {p.zone}{p.hemisphere}, origin in {origin.zone}{origin.hemisphere}"
        )


def utm_to_local(p: UtmPoint, origin: UtmPoint, z: float = 0.0) -> LocalPoint:
    _check_same_zone(p, origin)
    return LocalPoint(p.easting - origin.easting, p.northing - origin.northing, float(z))


def local_to_utm(p: LocalPoint, origin: UtmPoint) -> UtmPoint:
    return UtmPoint(origin.easting + p.x, origin.northing + p.y, origin.zone, origin.hemisphere)


def local_origin(points: list[GeodeticPoint]) -> UtmPoint:
    """South-west corner of the UTM bounding box of ``points``.

    Using this as the origin keeps every local coordinate non-negative.
    """
    if not points:
        raise GeoDomainError("need at least one point to define an origin")
    utm = [geodetic_to_utm(p) for p in points]
    zone, hemi = utm[0].zone, utm[0].hemisphere
    for u in utm[1:]:
        _check_same_zone(u, utm[0])
    return UtmPoint(min(u.easting for u in utm), min(u.northing for u in utm), zone, hemi)


def geodetic_to_local(p: GeodeticPoint, origin: UtmPoint, z: float = 0.0) -> LocalPoint:
    return utm_to_local(geodetic_to_utm(p), origin, z)
