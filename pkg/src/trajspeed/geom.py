"""Shared planar-geometry helpers.

All distances are computed in a local equirectangular projection: adequate at
county scale, cheap, and deterministic.  The projection convention (reference
latitude = midpoint of the geometry's latitude extent) is shared by the road
network index and the synthetic generator so both sides resolve the same
point-to-geometry distances bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MPH_TO_MPS = 0.44704
EARTH_RADIUS_M = 6371000.0
DEG_TO_RAD = math.pi / 180.0


@dataclass(frozen=True)
class LocalProjection:
    """Equirectangular lat/lon <-> meters around a fixed reference point."""

    lat0: float
    lon0: float
    lat_ref: float

    @property
    def meters_per_deg_lat(self) -> float:
        return EARTH_RADIUS_M * DEG_TO_RAD

    @property
    def meters_per_deg_lon(self) -> float:
        return EARTH_RADIUS_M * DEG_TO_RAD * math.cos(self.lat_ref * DEG_TO_RAD)

    def to_xy(self, lat, lon):
        x = (np.asarray(lon, dtype=np.float64) - self.lon0) * self.meters_per_deg_lon
        y = (np.asarray(lat, dtype=np.float64) - self.lat0) * self.meters_per_deg_lat
        return x, y

    def to_latlon(self, x, y):
        lon = np.asarray(x, dtype=np.float64) / self.meters_per_deg_lon + self.lon0
        lat = np.asarray(y, dtype=np.float64) / self.meters_per_deg_lat + self.lat0
        return lat, lon


def projection_for_bounds(lat_min: float, lat_max: float, lon_min: float, lon_max: float) -> LocalProjection:
    """Projection anchored at the bounding-box center (shared convention)."""
    lat0 = 0.5 * (lat_min + lat_max)
    lon0 = 0.5 * (lon_min + lon_max)
    return LocalProjection(lat0=lat0, lon0=lon0, lat_ref=lat0)


def wrap180(delta_deg):
    """Map a heading difference into (-180, 180]."""
    return 180.0 - np.mod(180.0 - np.asarray(delta_deg, dtype=np.float64), 360.0)


def bearing_deg(dx, dy):
    """Compass bearing of the vector (dx east, dy north), degrees in [0, 360)."""
    b = np.degrees(np.arctan2(np.asarray(dx, dtype=np.float64), np.asarray(dy, dtype=np.float64)))
    return np.mod(b, 360.0)


def heading_deviation(bearing, heading):
    """Smallest angle between a segment bearing and a point heading.

    The segment is undirected, so the bearing is compared in both directions;
    the result is in [0, 90].
    """
    d = np.abs(wrap180(np.asarray(bearing) - np.asarray(heading)))
    return np.minimum(d, 180.0 - d)


def point_segment_distance(px, py, ax, ay, bx, by):
    """Perpendicular distance from points to 2-D segments (vectorized, paired).

    Returns (dist, t) where t in [0, 1] is the normalized position of the
    closest point along each segment.
    """
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    dx = np.asarray(bx, dtype=np.float64) - ax
    dy = np.asarray(by, dtype=np.float64) - ay
    len2 = dx * dx + dy * dy
    # Degenerate (zero-length) pieces fall back to point distance.
    safe = np.where(len2 > 0.0, len2, 1.0)
    t = ((px - ax) * dx + (py - ay) * dy) / safe
    t = np.clip(np.where(len2 > 0.0, t, 0.0), 0.0, 1.0)
    cx = ax + t * dx
    cy = ay + t * dy
    return np.hypot(px - cx, py - cy), t
