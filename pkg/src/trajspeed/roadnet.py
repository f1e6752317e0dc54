"""Road-network attribute layer: loading, spatial indexing, point matching.

Matching is point-wise nearest-segment with a heading gate (no path
inference): among candidates within the match radius whose local bearing is
within the heading tolerance of the point heading (compared in both
directions), the smallest perpendicular distance wins; ties break on smaller
heading deviation, then lexicographic segment id.  Without any
heading-compatible candidate the plain nearest segment within radius is used.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

import numpy as np

from .config import MatchConfig, NetworkPropertyMap
from .geom import LocalProjection, bearing_deg, heading_deviation, point_segment_distance, projection_for_bounds
from .ingest import Journey

log = logging.getLogger(__name__)


class ContextClass(IntEnum):
    C1 = 0
    C2 = 1
    C3C = 2
    C3R = 3
    C4 = 4
    OTHER = 5


class LandUse(IntEnum):
    RESIDENTIAL = 0
    COMMERCIAL = 1
    INDUSTRIAL = 2
    INSTITUTIONAL = 3
    OTHER = 4


@dataclass
class RoadSegment:
    segment_id: str
    polyline: np.ndarray  # (n, 2) of (lat, lon), n >= 2
    speed_limit: float  # mph, > 0
    context_class: ContextClass
    land_use: LandUse
    functional_class: Optional[str] = None
    extra_attributes: dict = field(default_factory=dict)


@dataclass
class Intersection:
    intersection_id: str
    lat: float
    lon: float
    signalized: bool


@dataclass
class Network:
    segments: list
    intersections: list
    unknown_context: int = 0
    unknown_land_use: int = 0
    rejected_features: int = 0


@dataclass
class PointMatch:
    segment_id: Optional[str]
    perpendicular_distance: float
    along_heading_deviation: float
    nearest_signalized_m: float
    nearest_unsignalized_m: float


class NetworkError(RuntimeError):
    """Fatal network-file problem (malformed geometry, empty network)."""


def _parse_context(raw, network: Network) -> ContextClass:
    name = str(raw).strip().upper()
    if name in ContextClass.__members__ and name != "OTHER":
        return ContextClass[name]
    if name != "OTHER":
        network.unknown_context += 1
    return ContextClass.OTHER


def _parse_land_use(raw, network: Network) -> LandUse:
    name = str(raw).strip().upper()
    if name in LandUse.__members__ and name != "OTHER":
        return LandUse[name]
    if name != "OTHER":
        network.unknown_land_use += 1
    return LandUse.OTHER


def load_network(path: str, props: Optional[NetworkPropertyMap] = None) -> Network:
    """Read the GeoJSON profile: LineStrings become segments, Points intersections."""
    props = props or NetworkPropertyMap()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise NetworkError(f"cannot read network file '{path}': {exc}") from exc
    if doc.get("type") != "FeatureCollection" or not isinstance(doc.get("features"), list):
        raise NetworkError(f"'{path}' is not a GeoJSON FeatureCollection")
    network = Network(segments=[], intersections=[])
    for i, feature in enumerate(doc["features"]):
        geom = feature.get("geometry") or {}
        attrs = feature.get("properties") or {}
        gtype = geom.get("type")
        coords = geom.get("coordinates")
        if gtype == "LineString":
            if not isinstance(coords, list) or len(coords) < 2 or any(len(c) < 2 for c in coords):
                raise NetworkError(f"malformed LineString geometry in feature {i}")
            limit = attrs.get(props.speed_limit)
            if limit is None or not np.isfinite(limit) or limit <= 0:
                network.rejected_features += 1
                continue
            seg_id = str(attrs.get(props.segment_id, feature.get("id", f"seg_{i:06d}")))
            known = {props.segment_id, props.speed_limit, props.context_class, props.land_use, props.functional_class}
            network.segments.append(
                RoadSegment(
                    segment_id=seg_id,
                    polyline=np.asarray([[c[1], c[0]] for c in coords], dtype=np.float64),
                    speed_limit=float(limit),
                    context_class=_parse_context(attrs.get(props.context_class, "OTHER"), network),
                    land_use=_parse_land_use(attrs.get(props.land_use, "OTHER"), network),
                    functional_class=attrs.get(props.functional_class),
                    extra_attributes={k: v for k, v in attrs.items() if k not in known},
                )
            )
        elif gtype == "Point":
            if not isinstance(coords, list) or len(coords) < 2:
                raise NetworkError(f"malformed Point geometry in feature {i}")
            network.intersections.append(
                Intersection(
                    intersection_id=str(attrs.get(props.intersection_id, feature.get("id", f"int_{i:06d}"))),
                    lat=float(coords[1]),
                    lon=float(coords[0]),
                    signalized=bool(attrs.get(props.signalized, False)),
                )
            )
        else:
            raise NetworkError(f"unsupported geometry type {gtype!r} in feature {i}")
    if network.unknown_context or network.unknown_land_use:
        log.warning(
            "network '%s': %d unknown context and %d unknown land-use values mapped to OTHER",
            path,
            network.unknown_context,
            network.unknown_land_use,
        )
    return network


class _CellGrid:
    """Uniform hash grid over 2-D boxes; values are int arrays per cell."""

    def __init__(self, cell_size: float):
        self.cell = float(cell_size)
        self.table: dict = {}

    def insert_boxes(self, x0, y0, x1, y1):
        cs = self.cell
        cx0 = np.floor(x0 / cs).astype(np.int64)
        cy0 = np.floor(y0 / cs).astype(np.int64)
        cx1 = np.floor(x1 / cs).astype(np.int64)
        cy1 = np.floor(y1 / cs).astype(np.int64)
        buckets: dict = {}
        for i in range(len(cx0)):
            for cx in range(cx0[i], cx1[i] + 1):
                for cy in range(cy0[i], cy1[i] + 1):
                    buckets.setdefault((cx, cy), []).append(i)
        self.table = {k: np.asarray(v, dtype=np.int64) for k, v in buckets.items()}

    def query_ranges(self, x, y, radius):
        """Cell-range keys per query point (for grouping identical lookups)."""
        cs = self.cell
        cx0 = np.floor((x - radius) / cs).astype(np.int64)
        cy0 = np.floor((y - radius) / cs).astype(np.int64)
        cx1 = np.floor((x + radius) / cs).astype(np.int64)
        cy1 = np.floor((y + radius) / cs).astype(np.int64)
        return cx0, cy0, cx1, cy1

    def candidates_for_range(self, cx0, cy0, cx1, cy1) -> np.ndarray:
        parts = []
        for cx in range(cx0, cx1 + 1):
            for cy in range(cy0, cy1 + 1):
                arr = self.table.get((cx, cy))
                if arr is not None:
                    parts.append(arr)
        if not parts:
            return np.empty(0, dtype=np.int64)
        if len(parts) == 1:
            return parts[0]
        return np.unique(np.concatenate(parts))


class NetworkIndex:
    """Immutable spatial index over segment geometry and intersection points.

    Queries never mutate the index; it may be shared freely across workers.
    """

    def __init__(self, network: Network, cell_size_m: float = 250.0):
        if not network.segments and not network.intersections:
            raise NetworkError("cannot index an empty network")
        lats, lons = [], []
        for seg in network.segments:
            lats.extend(seg.polyline[:, 0])
            lons.extend(seg.polyline[:, 1])
        for node in network.intersections:
            lats.append(node.lat)
            lons.append(node.lon)
        self.projection: LocalProjection = projection_for_bounds(min(lats), max(lats), min(lons), max(lons))
        self.segments = list(network.segments)
        self.intersections = list(network.intersections)
        self.segment_ids = np.asarray([s.segment_id for s in self.segments], dtype=object)
        # Lexicographic rank used for deterministic tie-breaking.
        self.segment_rank = np.empty(len(self.segments), dtype=np.int64)
        self.segment_rank[np.argsort(self.segment_ids, kind="stable")] = np.arange(len(self.segments))
        self.speed_limits = np.asarray([s.speed_limit for s in self.segments], dtype=np.float64)
        self.context_codes = np.asarray([int(s.context_class) for s in self.segments], dtype=np.int8)
        self.land_use_codes = np.asarray([int(s.land_use) for s in self.segments], dtype=np.int8)

        ax, ay, bx, by, owner = [], [], [], [], []
        for si, seg in enumerate(self.segments):
            x, y = self.projection.to_xy(seg.polyline[:, 0], seg.polyline[:, 1])
            ax.append(x[:-1])
            ay.append(y[:-1])
            bx.append(x[1:])
            by.append(y[1:])
            owner.append(np.full(len(x) - 1, si, dtype=np.int64))
        if self.segments:
            self.sub_ax = np.concatenate(ax)
            self.sub_ay = np.concatenate(ay)
            self.sub_bx = np.concatenate(bx)
            self.sub_by = np.concatenate(by)
            self.sub_owner = np.concatenate(owner)
        else:
            self.sub_ax = self.sub_ay = self.sub_bx = self.sub_by = np.empty(0)
            self.sub_owner = np.empty(0, dtype=np.int64)
        self.sub_bearing = bearing_deg(self.sub_bx - self.sub_ax, self.sub_by - self.sub_ay)
        self._seg_grid = _CellGrid(cell_size_m)
        self._seg_grid.insert_boxes(
            np.minimum(self.sub_ax, self.sub_bx),
            np.minimum(self.sub_ay, self.sub_by),
            np.maximum(self.sub_ax, self.sub_bx),
            np.maximum(self.sub_ay, self.sub_by),
        )
        if self.intersections:
            self.int_x, self.int_y = self.projection.to_xy(
                np.asarray([n.lat for n in self.intersections]),
                np.asarray([n.lon for n in self.intersections]),
            )
        else:
            self.int_x = self.int_y = np.empty(0)
        self.int_signalized = np.asarray([n.signalized for n in self.intersections], dtype=bool)
        self.int_ids = np.asarray([n.intersection_id for n in self.intersections], dtype=object)
        self._int_grid = _CellGrid(cell_size_m)
        self._int_grid.insert_boxes(self.int_x, self.int_y, self.int_x, self.int_y)

    # -- candidate retrieval ------------------------------------------------

    def _pairs(self, grid: _CellGrid, x: np.ndarray, y: np.ndarray, radius: float):
        """(point_idx, item_idx) pairs from grid cells covering each query circle."""
        cx0, cy0, cx1, cy1 = grid.query_ranges(x, y, radius)
        keys = np.stack([cx0, cy0, cx1, cy1], axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        cand_lists = [grid.candidates_for_range(*uniq[k]) for k in range(len(uniq))]
        counts = np.asarray([len(cand_lists[k]) for k in inverse], dtype=np.int64)
        if counts.sum() == 0:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        pt_idx = np.repeat(np.arange(len(x), dtype=np.int64), counts)
        item_idx = np.concatenate([cand_lists[k] for k in inverse if len(cand_lists[k])])
        return pt_idx, item_idx

    def segment_candidates(self, x: float, y: float, radius: float) -> np.ndarray:
        """Segment indices with any geometry within ``radius`` of (x, y)."""
        pt, sub = self._pairs(self._seg_grid, np.asarray([x]), np.asarray([y]), radius)
        if len(sub) == 0:
            return np.empty(0, dtype=np.int64)
        dist, _ = point_segment_distance(
            x, y, self.sub_ax[sub], self.sub_ay[sub], self.sub_bx[sub], self.sub_by[sub]
        )
        del pt
        return np.unique(self.sub_owner[sub[dist <= radius]])

    def brute_force_candidates(self, x: float, y: float, radius: float) -> np.ndarray:
        dist, _ = point_segment_distance(x, y, self.sub_ax, self.sub_ay, self.sub_bx, self.sub_by)
        return np.unique(self.sub_owner[dist <= radius])


def build_index(network: Network, cell_size_m: float = 250.0) -> NetworkIndex:
    return NetworkIndex(network, cell_size_m=cell_size_m)


@dataclass
class MatchedJourney:
    """A journey enriched with per-point match results and attributes."""

    journey: Journey
    seg_index: np.ndarray  # int64 index into index.segments, -1 = no match
    segment_ids: np.ndarray  # object; None where unmatched
    perp_dist_m: np.ndarray
    heading_dev_deg: np.ndarray  # nan where unmatched
    speed_limit: np.ndarray  # nan where unmatched
    context_code: np.ndarray  # int8, -1 unmatched
    land_use_code: np.ndarray
    nearest_signalized_m: np.ndarray  # inf where none within radius
    nearest_unsignalized_m: np.ndarray
    # Intersections within the query radius of each point, as pair arrays.
    int_pair_point: np.ndarray
    int_pair_ids: np.ndarray  # object
    int_pair_signalized: np.ndarray
    int_pair_dist: np.ndarray
    coverage: float = 0.0
    low_coverage: bool = False

    def __len__(self) -> int:
        return len(self.seg_index)

    def point_match(self, i: int) -> PointMatch:
        return PointMatch(
            segment_id=self.segment_ids[i],
            perpendicular_distance=float(self.perp_dist_m[i]),
            along_heading_deviation=float(self.heading_dev_deg[i]),
            nearest_signalized_m=float(self.nearest_signalized_m[i]),
            nearest_unsignalized_m=float(self.nearest_unsignalized_m[i]),
        )


def _match_batch(index: NetworkIndex, x, y, heading, params: MatchConfig):
    """Vectorized matching of many points; returns per-point arrays."""
    n = len(x)
    seg_index = np.full(n, -1, dtype=np.int64)
    perp = np.full(n, np.inf)
    dev = np.full(n, np.nan)
    pt, sub = index._pairs(index._seg_grid, x, y, params.match_radius_m)
    if len(sub):
        dist, t = point_segment_distance(
            x[pt], y[pt], index.sub_ax[sub], index.sub_ay[sub], index.sub_bx[sub], index.sub_by[sub]
        )
        del t
        within = dist <= params.match_radius_m
        pt, sub, dist = pt[within], sub[within], dist[within]
    if len(sub):
        deviation = heading_deviation(index.sub_bearing[sub], heading[pt])
        owner = index.sub_owner[sub]
        rank = index.segment_rank[owner]
        incompatible = (deviation > params.heading_tol_deg).astype(np.int8)
        # Reduce sub-segments to one row per (point, owner segment): the row
        # with the smallest distance carries the local bearing deviation.
        order = np.lexsort((rank, deviation, dist, owner, pt))
        pt, owner, dist, deviation, rank, incompatible = (
            a[order] for a in (pt, owner, dist, deviation, rank, incompatible)
        )
        first = np.concatenate(([True], (pt[1:] != pt[:-1]) | (owner[1:] != owner[:-1])))
        pt, owner, dist, deviation, rank, incompatible = (
            a[first] for a in (pt, owner, dist, deviation, rank, incompatible)
        )
        # Pick per point: heading-compatible first, then distance, deviation, id rank.
        order = np.lexsort((rank, deviation, dist, incompatible, pt))
        pt, owner, dist, deviation = pt[order], owner[order], dist[order], deviation[order]
        first = np.concatenate(([True], pt[1:] != pt[:-1]))
        chosen_pt = pt[first]
        seg_index[chosen_pt] = owner[first]
        perp[chosen_pt] = dist[first]
        dev[chosen_pt] = deviation[first]

    near_sig = np.full(n, np.inf)
    near_unsig = np.full(n, np.inf)
    ipt, inode = index._pairs(index._int_grid, x, y, params.intersection_radius_m)
    idist = np.empty(0)
    if len(inode):
        idist = np.hypot(x[ipt] - index.int_x[inode], y[ipt] - index.int_y[inode])
        within = idist <= params.intersection_radius_m
        ipt, inode, idist = ipt[within], inode[within], idist[within]
        sig = index.int_signalized[inode]
        np.minimum.at(near_sig, ipt[sig], idist[sig])
        np.minimum.at(near_unsig, ipt[~sig], idist[~sig])
    return seg_index, perp, dev, near_sig, near_unsig, (ipt, inode, idist)


def match_point(lat: float, lon: float, heading: float, index: NetworkIndex, params: MatchConfig) -> PointMatch:
    """Match a single point; no-match is a valid result, never an error."""
    x, y = index.projection.to_xy(np.asarray([lat]), np.asarray([lon]))
    seg_index, perp, dev, near_sig, near_unsig, _ = _match_batch(
        index, x, y, np.asarray([heading], dtype=np.float64), params
    )
    si = int(seg_index[0])
    return PointMatch(
        segment_id=None if si < 0 else index.segments[si].segment_id,
        perpendicular_distance=float(perp[0]) if si >= 0 else float("inf"),
        along_heading_deviation=float(dev[0]),
        nearest_signalized_m=float(near_sig[0]),
        nearest_unsignalized_m=float(near_unsig[0]),
    )


def enrich_journey(journey: Journey, index: NetworkIndex, params: MatchConfig) -> MatchedJourney:
    """Attach per-point matches and resolved segment attributes to a journey."""
    x, y = index.projection.to_xy(journey.lat, journey.lon)
    seg_index, perp, dev, near_sig, near_unsig, pairs = _match_batch(index, x, y, journey.heading, params)
    matched = seg_index >= 0
    coverage = float(matched.mean()) if len(matched) else 0.0
    speed_limit = np.where(matched, index.speed_limits[np.maximum(seg_index, 0)], np.nan)
    context = np.where(matched, index.context_codes[np.maximum(seg_index, 0)], -1).astype(np.int8)
    return MatchedJourney(
        journey=journey,
        seg_index=seg_index,
        perp_dist_m=perp,
        heading_dev_deg=dev,
        speed_limit=speed_limit,
        context_code=context,
        land_use_code=np.where(matched, index.land_use_codes[np.maximum(seg_index, 0)], -1).astype(np.int8),
        nearest_signalized_m=near_sig,
        nearest_unsignalized_m=near_unsig,
        int_pair_point=pairs[0],
        int_pair_index=pairs[1],
        int_pair_dist=pairs[2],
        coverage=coverage,
        low_coverage=coverage < params.min_coverage,
    )
