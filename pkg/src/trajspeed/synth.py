"""Seeded synthetic bundles: grid network, simulated journeys, ground truth.

The simulator drives vehicles over a grid road network at 3-second sampling
with per-journey behavior profiles (target speeding ratio, planned stops with
dwell times, hard speed dips) and emits a points CSV plus the network
GeoJSON.  Ground truth for every journey aggregate and per-segment hotspot
statistic is then computed directly from the emitted samples with plain
Python loops - an implementation deliberately independent of the pipeline's
vectorized/streaming code paths, so the two can be compared field by field.

Design constraints that make truth well-defined:

* grid spacing >= 150 m so the only intersections within query radius of a
  point are the endpoints of its own segment;
* points never land within 1 m of a node (positions are nudged past), so the
  generating segment always strictly wins the matching rule;
* recorded speeds drive position integration (zero-order hold), so implied
  speeds never trip the teleport filter.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import yaml

from .geom import DEG_TO_RAD, EARTH_RADIUS_M, MPH_TO_MPS, LocalProjection

SAMPLE_S = 3
STOP_SPEED_MPH = 2.0
TURN_MIN_YAW = 8.0
TURN_ANGLE = 45.0
TURN_WINDOW_S = 15.0
HARD_THRESH = 1.0
INTERSECTION_RADIUS_M = 50.0

# Mid-bin speeding-ratio targets and jitter half-widths per level.
LEVEL_TARGETS = {
    0: (0.020, 0.012),
    1: (0.115, 0.045),
    2: (0.290, 0.060),
    3: (0.490, 0.060),
    4: (0.690, 0.060),
    5: (0.950, 0.100),
}

CONTEXT_CHOICES = ("C3C", "C3R", "C4", "C1", "C2", "OTHER")
CONTEXT_WEIGHTS = (0.45, 0.25, 0.12, 0.05, 0.08, 0.05)
LAND_FOR_CONTEXT = {
    "C3C": ("COMMERCIAL", "INDUSTRIAL"),
    "C3R": ("RESIDENTIAL", "RESIDENTIAL"),
    "C4": ("COMMERCIAL", "INSTITUTIONAL"),
    "C1": ("RESIDENTIAL", "OTHER"),
    "C2": ("INDUSTRIAL", "OTHER"),
    "OTHER": ("OTHER", "OTHER"),
}
SPEED_LIMITS = (25.0, 30.0, 35.0, 40.0, 45.0, 50.0)

# Journey start windows: two November weeks, one per year.
START_WINDOWS = (
    (datetime(2019, 11, 11, tzinfo=timezone.utc), datetime(2019, 11, 17, tzinfo=timezone.utc)),
    (datetime(2020, 11, 9, tzinfo=timezone.utc), datetime(2020, 11, 16, tzinfo=timezone.utc)),
)


@dataclass
class SynthConfig:
    n_journeys: int = 100
    min_total_points: Optional[int] = None
    grid_nodes: int = 10
    block_m: float = 500.0
    seed: int = 20191111
    behavior_mix: Optional[dict] = None  # level -> weight; default uniform 0..5
    signalized_frac: float = 0.45
    n_corrupt_lines: int = 0
    base_lat: float = 28.70
    base_lon: float = -81.35
    min_samples: int = 80
    max_samples: int = 260

    def __post_init__(self):
        if self.block_m < 150.0:
            raise ValueError("block_m must be >= 150 m to keep intersection truth unambiguous")


@dataclass
class _Leg:
    seg_index: int
    start_node: int
    end_node: int


@dataclass
class GridNetwork:
    """Generator-side view of the grid: design-frame coordinates plus attributes."""

    node_xy: np.ndarray  # (n_nodes, 2) design meters
    node_ids: list
    node_signalized: np.ndarray
    seg_ids: list
    seg_nodes: np.ndarray  # (n_segs, 2) node indices
    seg_limit: np.ndarray
    seg_context: list
    seg_land: list
    node_latlon: np.ndarray = None
    neighbors: dict = None


def _build_grid(cfg: SynthConfig, rng: np.random.Generator) -> GridNetwork:
    g = cfg.grid_nodes
    nodes, node_ids = [], []
    for r in range(g):
        for c in range(g):
            nodes.append((c * cfg.block_m, r * cfg.block_m))
            node_ids.append(f"n_{r}_{c}")
    node_xy = np.asarray(nodes, dtype=np.float64)
    signalized = rng.random(len(nodes)) < cfg.signalized_frac
    seg_ids, seg_nodes = [], []
    for r in range(g):
        for c in range(g - 1):
            seg_ids.append(f"h_{r}_{c}")
            seg_nodes.append((r * g + c, r * g + c + 1))
    for r in range(g - 1):
        for c in range(g):
            seg_ids.append(f"v_{r}_{c}")
            seg_nodes.append((r * g + c, (r + 1) * g + c))
    n_segs = len(seg_ids)
    limits = rng.choice(np.asarray(SPEED_LIMITS), size=n_segs)
    contexts = [str(rng.choice(CONTEXT_CHOICES, p=CONTEXT_WEIGHTS)) for _ in range(n_segs)]
    lands = [LAND_FOR_CONTEXT[ctx][int(rng.random() < 0.25)] for ctx in contexts]
    neighbors: dict = {}
    for si, (a, b) in enumerate(seg_nodes):
        neighbors.setdefault(a, []).append((si, b))
        neighbors.setdefault(b, []).append((si, a))
    return GridNetwork(
        node_xy=node_xy,
        node_ids=node_ids,
        node_signalized=signalized,
        seg_ids=seg_ids,
        seg_nodes=np.asarray(seg_nodes, dtype=np.int64),
        seg_limit=limits.astype(np.float64),
        seg_context=contexts,
        seg_land=lands,
        neighbors=neighbors,
    )


def _design_projection(cfg: SynthConfig) -> LocalProjection:
    return LocalProjection(lat0=cfg.base_lat, lon0=cfg.base_lon, lat_ref=cfg.base_lat)


def _network_geojson(net: GridNetwork, proj: LocalProjection) -> dict:
    lat, lon = proj.to_latlon(net.node_xy[:, 0], net.node_xy[:, 1])
    features = []
    for si, sid in enumerate(net.seg_ids):
        a, b = net.seg_nodes[si]
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[float(lon[a]), float(lat[a])], [float(lon[b]), float(lat[b])]],
                },
                "properties": {
                    "segment_id": sid,
                    "speed_limit": float(net.seg_limit[si]),
                    "context_class": net.seg_context[si],
                    "land_use": net.seg_land[si],
                    "functional_class": "synthetic",
                },
            }
        )
    for ni, nid in enumerate(net.node_ids):
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [float(lon[ni]), float(lat[ni])]},
                "properties": {"intersection_id": nid, "signalized": bool(net.node_signalized[ni])},
            }
        )
    net.node_latlon = np.stack([lat, lon], axis=1)
    return {"type": "FeatureCollection", "features": features}


@dataclass
class _SimJourney:
    journey_id: str
    ts: list
    speed: list
    heading: list
    pos: list  # cumulative path distance at each sample
    leg_of_sample: list  # index into legs
    legs: list  # list of _Leg


def _simulate_journey(jid: str, net: GridNetwork, cfg: SynthConfig, rng: np.random.Generator, level: int, start_ts: int) -> _SimJourney:
    target, jitter = LEVEL_TARGETS[level]
    rho = target + rng.uniform(-jitter, jitter)
    below_limit = level == 0 and rng.random() < 0.35  # some journeys never speed at all
    n_samples = int(rng.integers(cfg.min_samples, cfg.max_samples + 1))
    n_stops_sig = int(rng.integers(0, 4))
    n_stops_unsig = int(rng.integers(0, 3))
    n_stops_mid = int(rng.integers(0, 2))
    dip_at = set(rng.choice(n_samples, size=int(rng.integers(0, 3)), replace=False).tolist())

    # Random walk over the grid; legs appended on demand.
    node = int(rng.integers(0, len(net.node_ids)))
    options = net.neighbors[node]
    seg_index, nxt = options[int(rng.integers(0, len(options)))]
    legs = [_Leg(seg_index=seg_index, start_node=node, end_node=nxt)]

    def extend_route():
        last = legs[-1]
        choices = [(si, other) for si, other in net.neighbors[last.end_node] if other != last.start_node]
        if not choices:
            choices = net.neighbors[last.end_node]
        si, other = choices[int(rng.integers(0, len(choices)))]
        legs.append(_Leg(seg_index=si, start_node=last.end_node, end_node=other))

    block = cfg.block_m

    def leg_speed(leg: _Leg) -> float:
        limit = net.seg_limit[leg.seg_index]
        if below_limit:
            return max(5.0, limit * (1.0 + rng.uniform(-0.15, -0.03)))
        return max(5.0, limit * (1.0 + rho + rng.uniform(-0.004, 0.004)))

    ts, speed, heading, pos_list, leg_of_sample = [], [], [], [], []
    leg_idx = 0
    pos = rng.uniform(0.2, 0.8) * block  # cumulative distance; leg k spans [k*block, (k+1)*block)
    cruise = leg_speed(legs[0])
    pending = {"sig": n_stops_sig, "unsig": n_stops_unsig, "mid": n_stops_mid}
    stop_at: Optional[float] = None  # cumulative distance of the scheduled stop
    dwell_left = 0
    planned_for_leg = -1

    def bearing_of(leg: _Leg) -> float:
        ax, ay = net.node_xy[leg.start_node]
        bx, by = net.node_xy[leg.end_node]
        return math.degrees(math.atan2(bx - ax, by - ay)) % 360.0

    i = 0
    while i < n_samples:
        # Advance to the leg containing pos, planning stops on entry.
        while pos >= (leg_idx + 1) * block:
            leg_idx += 1
            if leg_idx >= len(legs):
                extend_route()
            cruise = leg_speed(legs[leg_idx])
        leg = legs[leg_idx]
        if planned_for_leg < leg_idx and dwell_left == 0:
            planned_for_leg = leg_idx
            end_sig = bool(net.node_signalized[leg.end_node])
            leg_end = (leg_idx + 1) * block
            if pending["sig"] > 0 and end_sig and rng.random() < 0.5:
                pending["sig"] -= 1
                stop_at = leg_end - rng.uniform(8.0, 25.0)
            elif pending["unsig"] > 0 and not end_sig and rng.random() < 0.5:
                pending["unsig"] -= 1
                stop_at = leg_end - rng.uniform(8.0, 25.0)
            elif pending["mid"] > 0 and rng.random() < 0.35:
                pending["mid"] -= 1
                stop_at = leg_idx * block + rng.uniform(0.3, 0.6) * block
            if stop_at is not None and stop_at <= pos:
                stop_at = None
        # Keep samples off leg boundaries so segment assignment is unambiguous.
        boundary = round(pos / block) * block
        if abs(pos - boundary) < 1.0:
            pos = boundary + 1.5
            leg_end_check = (leg_idx + 1) * block
            if pos >= leg_end_check:
                continue  # re-enter leg bookkeeping
        v = cruise
        if dwell_left > 0:
            v = 0.0
            dwell_left -= 1
        elif stop_at is not None and pos >= stop_at:
            # Arrived at the stop position this sample.
            v = 0.0
            dwell_left = int(rng.integers(2, 16)) - 1
            stop_at = None
        elif stop_at is not None:
            remaining = stop_at - pos
            step = cruise * MPH_TO_MPS * SAMPLE_S
            if remaining <= 1.5 * step:
                v = remaining / (MPH_TO_MPS * SAMPLE_S)  # land exactly on the stop
        elif i in dip_at:
            v = max(5.0, cruise - rng.uniform(12.0, 18.0))
        ts.append(start_ts + SAMPLE_S * i)
        speed.append(v)
        heading.append(bearing_of(leg))
        pos_list.append(pos)
        leg_of_sample.append(leg_idx)
        pos += v * MPH_TO_MPS * SAMPLE_S
        i += 1
    return _SimJourney(journey_id=jid, ts=ts, speed=speed, heading=heading, pos=pos_list, leg_of_sample=leg_of_sample, legs=legs)


# ---------------------------------------------------------------------------
# Ground-truth oracle: naive loops over the emitted samples.
# ---------------------------------------------------------------------------


def _wrap180(d: float) -> float:
    return 180.0 - (180.0 - d) % 360.0


def _oracle_level(prop: float) -> int:
    if prop < 0.05:
        return 0
    if prop < 0.20:
        return 1
    if prop < 0.40:
        return 2
    if prop < 0.60:
        return 3
    if prop < 0.80:
        return 4
    return 5


def oracle_journey_features(
    ts, speed, heading, px, py, seg_limit, seg_context, seg_land, end_nodes, node_xy, node_sig, node_ids
):
    """Aggregate-row truth for one journey, from raw sample lists.

    ``end_nodes[i]`` holds the two node indices of sample i's segment; on the
    generator grid those are the only intersections that can fall within the
    query radius of the sample.
    """
    n = len(ts)
    # Per-point distance to nearest signalized / unsignalized node, and the
    # set of signalized nodes within radius.
    dist_sig = [math.inf] * n
    dist_unsig = [math.inf] * n
    sig_ids = set()
    for i in range(n):
        for node in end_nodes[i]:
            d = math.hypot(px[i] - node_xy[node][0], py[i] - node_xy[node][1])
            if node_sig[node]:
                if d < dist_sig[i]:
                    dist_sig[i] = d
                if d <= INTERSECTION_RADIUS_M:
                    sig_ids.add(node_ids[node])
            elif d < dist_unsig[i]:
                dist_unsig[i] = d

    dts, accels, yaws, movings, stoppeds, dhs = [], [], [], [], [], []
    for i in range(n - 1):
        dt = ts[i + 1] - ts[i]
        dts.append(dt)
        accels.append((speed[i + 1] - speed[i]) * MPH_TO_MPS / dt)
        dh = _wrap180(heading[i + 1] - heading[i])
        dhs.append(dh)
        yaws.append(abs(dh) / dt)
        movings.append(speed[i] >= STOP_SPEED_MPH and speed[i + 1] >= STOP_SPEED_MPH)
        stoppeds.append(speed[i] < STOP_SPEED_MPH and speed[i + 1] < STOP_SPEED_MPH)

    # Stop episodes: maximal stopped runs with intersection attribution.
    time_stopped = 0.0
    time_sig = 0.0
    time_unsig = 0.0
    i = 0
    while i < n - 1:
        if not stoppeds[i]:
            i += 1
            continue
        j = i
        while j < n - 1 and stoppeds[j]:
            j += 1
        duration = math.fsum(dts[i:j])
        best_sig = min(dist_sig[i : j + 1])
        best_unsig = min(dist_unsig[i : j + 1])
        time_stopped += duration
        if best_sig <= INTERSECTION_RADIUS_M:
            time_sig += duration
        elif best_unsig <= INTERSECTION_RADIUS_M:
            time_unsig += duration
        i = j

    # Turns: same-sign yaw-gated runs reaching the angle within the window.
    turn_sum = 0
    i = 0
    while i < n - 1:
        if yaws[i] < TURN_MIN_YAW or dhs[i] == 0.0:
            i += 1
            continue
        j = i
        sign = 1.0 if dhs[i] > 0 else -1.0
        while j < n - 1 and yaws[j] >= TURN_MIN_YAW and dhs[j] * sign > 0:
            j += 1
        # two-pointer window over [i, j)
        lo = i
        cum = 0.0
        elapsed = 0.0
        hit = False
        for hi in range(i, j):
            cum += dhs[hi]
            elapsed += dts[hi]
            while elapsed > TURN_WINDOW_S and lo <= hi:
                cum -= dhs[lo]
                elapsed -= dts[lo]
                lo += 1
            if abs(cum) >= TURN_ANGLE:
                hit = True
                break
        if hit:
            turn_sum += 1
        i = j

    braking = [a for a in accels if a < 0.0]
    accelerating = [a for a in accels if a > 0.0]
    n_moving = sum(1 for m in movings if m)
    moving_time = math.fsum(dts[i] for i in range(n - 1) if movings[i])
    moving_speed = math.fsum(dts[i] * speed[i] for i in range(n - 1) if movings[i]) / moving_time
    y_time = math.fsum(
        dts[i] * max(0.0, (speed[i] - seg_limit[i]) / seg_limit[i]) for i in range(n - 1) if movings[i]
    )
    speeding_prop = y_time / moving_time

    land_time: dict = {}
    ctx_time: dict = {}
    total_time = 0.0
    for i in range(n - 1):
        total_time += dts[i]
        land_time[seg_land[i]] = land_time.get(seg_land[i], 0.0) + dts[i]
        ctx_time[seg_context[i]] = ctx_time.get(seg_context[i], 0.0) + dts[i]

    start = datetime.fromtimestamp(ts[0], tz=timezone.utc)
    return {
        "timeStopped_sum": time_stopped,
        "timeStoppedAtSignalized_sum": time_sig,
        "timeStoppedAtUnsignalized_sum": time_unsig,
        "journeytime_sum": float(ts[-1] - ts[0]),
        "isSignalized": len(sig_ids),
        "turn_sum": turn_sum,
        "hardbrake_mean": math.fsum(braking) / len(braking) if braking else 0.0,
        "hardbrake_min": min(braking) if braking else 0.0,
        "hardbrake_count": math.fsum(braking),
        "hardacc_mean": math.fsum(accelerating) / len(accelerating) if accelerating else 0.0,
        "hardacc_max": max(accelerating) if accelerating else 0.0,
        "hardacc_count": math.fsum(accelerating),
        "moving_speed": moving_speed,
        "yaw_rate_mean": math.fsum(yaws) / len(yaws),
        "yaw_rate_max": max(yaws),
        "moving_yaw_rate": math.fsum(y for y in yaws if y >= TURN_MIN_YAW),
        "hour": start.hour,
        "dayofweek": start.weekday(),
        "year": start.year,
        "hardbrake_prop": sum(1 for a in accels if a <= -HARD_THRESH) / n_moving,
        "hardacc_prop": sum(1 for a in accels if a >= HARD_THRESH) / n_moving,
        "speeding_prop": speeding_prop,
        "Residential_prop": land_time.get("RESIDENTIAL", 0.0) / total_time,
        "Commerical_prop": land_time.get("COMMERCIAL", 0.0) / total_time,
        "Industrial_prop": land_time.get("INDUSTRIAL", 0.0) / total_time,
        "Institutional_prop": land_time.get("INSTITUTIONAL", 0.0) / total_time,
        "C1_prop": ctx_time.get("C1", 0.0) / total_time,
        "C2_prop": ctx_time.get("C2", 0.0) / total_time,
        "C3C_prop": ctx_time.get("C3C", 0.0) / total_time,
        "C3R_prop": ctx_time.get("C3R", 0.0) / total_time,
        "C4_prop": ctx_time.get("C4", 0.0) / total_time,
        "speeding_level": _oracle_level(speeding_prop),
    }


@dataclass
class SynthResult:
    out_dir: Path
    network_path: Path
    points_path: Path
    truth_path: Path
    config_path: Path
    n_points: int
    n_journeys: int
    corrupt_lines: list
    truth: dict


def generate_synthetic(cfg: SynthConfig, out_dir) -> SynthResult:
    """Write network.geojson, points.csv, truth.json, config.yaml; return summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(cfg.seed)
    net_seed, journey_seed, corrupt_seed = root.spawn(3)
    rng = np.random.default_rng(net_seed)
    net = _build_grid(cfg, rng)
    proj = _design_projection(cfg)
    geo = _network_geojson(net, proj)
    network_path = out / "network.geojson"
    with open(network_path, "w", encoding="utf-8") as fh:
        json.dump(geo, fh, sort_keys=True)

    # Oracle projection: the documented shared convention, recomputed
    # independently from the emitted node coordinates.
    lat_min = float(net.node_latlon[:, 0].min())
    lat_max = float(net.node_latlon[:, 0].max())
    lon_min = float(net.node_latlon[:, 1].min())
    lon_max = float(net.node_latlon[:, 1].max())
    olat0 = 0.5 * (lat_min + lat_max)
    olon0 = 0.5 * (lon_min + lon_max)
    m_lat = EARTH_RADIUS_M * DEG_TO_RAD
    m_lon = EARTH_RADIUS_M * DEG_TO_RAD * math.cos(olat0 * DEG_TO_RAD)
    node_xy_oracle = [
        ((lon - olon0) * m_lon, (lat - olat0) * m_lat) for lat, lon in net.node_latlon
    ]

    mix = cfg.behavior_mix or {k: 1.0 for k in range(6)}
    levels = sorted(mix)
    weights = np.asarray([mix[k] for k in levels], dtype=np.float64)
    weights = weights / weights.sum()

    jrng = np.random.default_rng(journey_seed)
    frames = []
    truth_journeys = {}
    level_hist = [0] * 6
    seg_truth = {sid: {"count": 0, "values": [], "bins": [0] * 6} for sid in net.seg_ids}
    total_points = 0
    jcount = 0
    starts_seen = set()
    while True:
        if cfg.min_total_points is not None:
            if jcount >= cfg.n_journeys and total_points >= cfg.min_total_points:
                break
        elif jcount >= cfg.n_journeys:
            break
        jid = f"j{jcount:07d}"
        level = int(jrng.choice(levels, p=weights))
        window = START_WINDOWS[int(jrng.integers(0, len(START_WINDOWS)))]
        span = int((window[1] - window[0]).total_seconds())
        start_ts = int(window[0].timestamp()) + int(jrng.integers(0, span))
        while start_ts in starts_seen:  # keep (start_ts, jid) ordering simple
            start_ts += 1
        starts_seen.add(start_ts)
        sim = _simulate_journey(jid, net, cfg, jrng, level, start_ts)
        n = len(sim.ts)
        total_points += n
        jcount += 1

        # Sample coordinates: design-frame position -> lat/lon.
        xs, ys = [], []
        for pos, leg_idx in zip(sim.pos, sim.leg_of_sample):
            leg = sim.legs[leg_idx]
            frac = (pos - leg_idx * cfg.block_m) / cfg.block_m
            ax, ay = net.node_xy[leg.start_node]
            bx, by = net.node_xy[leg.end_node]
            xs.append(ax + frac * (bx - ax))
            ys.append(ay + frac * (by - ay))
        lat, lon = proj.to_latlon(np.asarray(xs), np.asarray(ys))

        seg_of_sample = [sim.legs[k].seg_index for k in sim.leg_of_sample]
        frames.append(
            pd.DataFrame(
                {
                    "journeyId": jid,
                    "dataPointId": [f"{jid}_p{i:05d}" for i in range(n)],
                    "capturedTimestamp": np.asarray(sim.ts, dtype=np.int64),
                    "latitude": lat,
                    "longitude": lon,
                    "speed": np.asarray(sim.speed),
                    "heading": np.asarray(sim.heading),
                    "postalCode": "32746",
                }
            )
        )

        px = [(float(lo) - olon0) * m_lon for lo in lon]
        py = [(float(la) - olat0) * m_lat for la in lat]
        end_nodes = [tuple(net.seg_nodes[s]) for s in seg_of_sample]
        row = oracle_journey_features(
            sim.ts,
            sim.speed,
            sim.heading,
            px,
            py,
            [float(net.seg_limit[s]) for s in seg_of_sample],
            [net.seg_context[s] for s in seg_of_sample],
            [net.seg_land[s] for s in seg_of_sample],
            end_nodes,
            node_xy_oracle,
            net.node_signalized,
            net.node_ids,
        )
        truth_journeys[jid] = row
        level_hist[row["speeding_level"]] += 1
        for i in range(n):
            s = seg_of_sample[i]
            y = max(0.0, (sim.speed[i] - net.seg_limit[s]) / net.seg_limit[s])
            entry = seg_truth[net.seg_ids[s]]
            entry["count"] += 1
            entry["values"].append(y)
            entry["bins"][_oracle_level(y)] += 1

    points = pd.concat(frames, ignore_index=True)

    corrupt_lines = []
    if cfg.n_corrupt_lines > 0:
        # Corrupt lines keep the column structure but fail field validation;
        # final row slots are chosen up front so line numbers are exact.
        crng = np.random.default_rng(corrupt_seed)
        n_rows = len(points)
        n_total = n_rows + cfg.n_corrupt_lines
        slots = np.sort(crng.choice(n_total, size=cfg.n_corrupt_lines, replace=False))
        kinds = ["lat", "lon", "speed", "heading", "ts"]
        corrupt_rows = []
        for k, slot in enumerate(slots):
            kind = kinds[k % len(kinds)]
            corrupt_rows.append(
                {
                    "journeyId": "corrupt",
                    "dataPointId": f"corrupt_{k}",
                    "capturedTimestamp": -1 if kind == "ts" else 1573500000,
                    "latitude": 97.3 if kind == "lat" else 28.7,
                    "longitude": 191.2 if kind == "lon" else -81.35,
                    "speed": -4.0 if kind == "speed" else 30.0,
                    "heading": 370.0 if kind == "heading" else 90.0,
                    "postalCode": "00000",
                }
            )
            corrupt_lines.append(int(slot) + 2)  # 1-based, after the header
        position = np.empty(n_total, dtype=np.int64)
        is_corrupt = np.zeros(n_total, dtype=bool)
        is_corrupt[slots] = True
        position[:n_rows] = np.flatnonzero(~is_corrupt)
        position[n_rows:] = slots
        merged = pd.concat([points, pd.DataFrame(corrupt_rows)], ignore_index=True)
        points = merged.iloc[np.argsort(position, kind="stable")].reset_index(drop=True)

    points_path = out / "points.csv"
    points.to_csv(points_path, index=False)

    values_summary = {}
    for sid, entry in seg_truth.items():
        if entry["count"] == 0:
            continue
        values_summary[sid] = {
            "count": entry["count"],
            "mean": math.fsum(entry["values"]) / entry["count"],
            "bins": entry["bins"],
        }

    truth = {
        "seed": cfg.seed,
        "n_journeys": jcount,
        "n_points": int(total_points),
        "corrupt_lines": corrupt_lines,
        "level_histogram": level_hist,
        "journeys": truth_journeys,
        "segments": values_summary,
    }
    truth_path = out / "truth.json"
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump(truth, fh, sort_keys=True)

    config_path = out / "config.yaml"
    bundle_cfg = {
        "points": [str(points_path)],
        "network": str(network_path),
        "output_dir": str(out / "artifacts"),
    }
    with open(config_path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(bundle_cfg, fh, sort_keys=True)

    return SynthResult(
        out_dir=out,
        network_path=network_path,
        points_path=points_path,
        truth_path=truth_path,
        config_path=config_path,
        n_points=int(total_points),
        n_journeys=jcount,
        corrupt_lines=corrupt_lines,
        truth=truth,
    )
