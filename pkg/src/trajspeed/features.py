"""Journey-level feature aggregation and speeding-level labeling.

Conventions used throughout (and mirrored by the independent oracle in
``synth``):

* intervals carry their start point's speed, speed limit, and segment
  (zero-order hold over the sampling interval);
* per-interval speeding is floored at zero before averaging, so under-limit
  driving cannot offset speeding;
* journey-level speeding averages over moving, matched intervals only, which
  removes signal-stop bias from the traversal speed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from typing import Iterable, Optional
from zoneinfo import ZoneInfo

import numpy as np
import pandas as pd

from .config import FeatureConfig, KinematicsConfig
from .kinematics import IntervalSet, StopAttribution, StopEpisode, TurnEvent
from .roadnet import ContextClass, LandUse, MatchedJourney

log = logging.getLogger(__name__)

LEVEL_EDGES = (0.05, 0.20, 0.40, 0.60, 0.80)
N_LEVELS = 6

# Aggregate column order; the label is last.
TABLE_COLUMNS = (
    "timeStopped_sum",
    "timeStoppedAtSignalized_sum",
    "timeStoppedAtUnsignalized_sum",
    "journeytime_sum",
    "isSignalized",
    "turn_sum",
    "hardbrake_mean",
    "hardbrake_min",
    "hardbrake_count",
    "hardacc_mean",
    "hardacc_max",
    "hardacc_count",
    "moving_speed",
    "yaw_rate_mean",
    "yaw_rate_max",
    "moving_yaw_rate",
    "hour",
    "dayofweek",
    "year",
    "hardbrake_prop",
    "hardacc_prop",
    "speeding_prop",
    "Residential_prop",
    "Commerical_prop",
    "Industrial_prop",
    "Institutional_prop",
    "C1_prop",
    "C2_prop",
    "C3C_prop",
    "C3R_prop",
    "C4_prop",
    "speeding_level",
)

# speeding_prop determines the label, so it is excluded from the default
# predictor set; adding it back is possible but leaks the label.
DEFAULT_FEATURES = tuple(c for c in TABLE_COLUMNS if c not in ("speeding_prop", "speeding_level"))

LAND_USE_COLUMNS = {
    LandUse.RESIDENTIAL: "Residential_prop",
    LandUse.COMMERCIAL: "Commerical_prop",
    LandUse.INDUSTRIAL: "Industrial_prop",
    LandUse.INSTITUTIONAL: "Institutional_prop",
}
CONTEXT_COLUMNS = {
    ContextClass.C1: "C1_prop",
    ContextClass.C2: "C2_prop",
    ContextClass.C3C: "C3C_prop",
    ContextClass.C3R: "C3R_prop",
    ContextClass.C4: "C4_prop",
}


def point_speeding(speed: float, speed_limit: float) -> float:
    """Relative amount above the speed limit; negative below it."""
    if not speed_limit > 0:
        raise ValueError(f"speed_limit must be > 0, got {speed_limit}")
    return (speed - speed_limit) / speed_limit


def bin_level(speeding_prop) -> int:
    """Speeding level 0..5 from the proportion, left-closed bins.

    Boundaries 0.05/0.20/0.40/0.60/0.80 map to levels 1/2/3/4/5; anything at
    or above the top boundary clamps to level 5.
    """
    arr = np.asarray(speeding_prop, dtype=np.float64)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("speeding proportion must be finite and >= 0")
    levels = np.searchsorted(np.asarray(LEVEL_EDGES), arr, side="right")
    if np.ndim(speeding_prop) == 0:
        return int(levels)
    return levels.astype(np.int64)


@dataclass
class JourneyFeatures:
    """One aggregated row: all table columns plus the journey id.

    ``hardbrake_count`` / ``hardacc_count`` are sums of signed accelerations
    over the braking / accelerating interval populations (the source table's
    own statistics for these rows are signed and fractional, so a plain count
    cannot be what they hold); column names are kept for schema fidelity.
    ``moving_yaw_rate`` is likewise a per-journey sum over turning intervals.
    """

    journey_id: str
    timeStopped_sum: float
    timeStoppedAtSignalized_sum: float
    timeStoppedAtUnsignalized_sum: float
    journeytime_sum: float
    isSignalized: int
    turn_sum: int
    hardbrake_mean: float
    hardbrake_min: float
    hardbrake_count: float
    hardacc_mean: float
    hardacc_max: float
    hardacc_count: float
    moving_speed: float
    yaw_rate_mean: float
    yaw_rate_max: float
    moving_yaw_rate: float
    hour: int
    dayofweek: int
    year: int
    hardbrake_prop: float
    hardacc_prop: float
    speeding_prop: float
    Residential_prop: float
    Commerical_prop: float
    Industrial_prop: float
    Institutional_prop: float
    C1_prop: float
    C2_prop: float
    C3C_prop: float
    C3R_prop: float
    C4_prop: float
    speeding_level: int

    def as_row(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class AggregationError(ValueError):
    """Journey cannot be aggregated; carries a reason code."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def aggregate_journey(
    matched: MatchedJourney,
    intervals: IntervalSet,
    stops: list[StopEpisode],
    turns: list[TurnEvent],
    n_signalized: int,
    feat_cfg: FeatureConfig,
    kin_cfg: KinematicsConfig,
    enforce_coverage: bool = True,
) -> JourneyFeatures:
    """Compute the full aggregate row for one enriched journey.

    Raises AggregationError (with a reason code) for journeys excluded from
    labeling: low match coverage, no moving interval, or no matched moving
    interval.
    """
    if enforce_coverage and matched.low_coverage:
        raise AggregationError("low_coverage")
    journey = matched.journey
    valid = intervals.valid
    dt = intervals.dt[valid]
    accel = intervals.accel[valid]
    yaw = intervals.yaw_rate[valid]
    moving = intervals.moving[valid]
    start_idx = intervals.start[valid]
    if not moving.any():
        raise AggregationError("no_moving_interval")
    seg_matched = matched.seg_index[start_idx] >= 0
    moving_matched = moving & seg_matched
    if not moving_matched.any():
        raise AggregationError("no_matched_moving_interval")

    braking = accel < 0.0
    accelerating = accel > 0.0
    n_moving = int(moving.sum())

    hardbrake_mean = float(accel[braking].mean()) if braking.any() else 0.0
    hardbrake_min = float(accel[braking].min()) if braking.any() else 0.0
    hardbrake_count = float(accel[braking].sum())
    hardacc_mean = float(accel[accelerating].mean()) if accelerating.any() else 0.0
    hardacc_max = float(accel[accelerating].max()) if accelerating.any() else 0.0
    hardacc_count = float(accel[accelerating].sum())
    hardbrake_prop = float((accel <= -feat_cfg.hard_brake_mps2).sum()) / n_moving
    hardacc_prop = float((accel >= feat_cfg.hard_acc_mps2).sum()) / n_moving

    v_start = journey.speed[start_idx]
    moving_time = float(dt[moving].sum())
    moving_speed = float((dt[moving] * v_start[moving]).sum()) / moving_time

    yaw_rate_mean = float(yaw.mean())
    yaw_rate_max = float(yaw.max())
    moving_yaw_rate = float(yaw[yaw >= kin_cfg.turn_min_yaw_dps].sum())

    # Time-on-attribute proportions over matched interval time.
    matched_dt = dt[seg_matched]
    matched_time = float(matched_dt.sum())
    land_codes = matched.land_use_code[start_idx[seg_matched]]
    ctx_codes = matched.context_code[start_idx[seg_matched]]
    land_time = {code: float(matched_dt[land_codes == int(code)].sum()) for code in LAND_USE_COLUMNS}
    ctx_time = {code: float(matched_dt[ctx_codes == int(code)].sum()) for code in CONTEXT_COLUMNS}

    limits = matched.speed_limit[start_idx]
    y = np.maximum(0.0, (v_start[moving_matched] - limits[moving_matched]) / limits[moving_matched])
    mm_time = float(dt[moving_matched].sum())
    speeding_prop = float((dt[moving_matched] * y).sum()) / mm_time

    stopped_time = math.fsum(ep.duration for ep in stops)
    sig_time = math.fsum(ep.duration for ep in stops if ep.attribution == StopAttribution.SIGNALIZED)
    unsig_time = math.fsum(ep.duration for ep in stops if ep.attribution == StopAttribution.UNSIGNALIZED)

    tz = ZoneInfo(feat_cfg.timezone) if feat_cfg.timezone else timezone.utc
    start_dt = datetime.fromtimestamp(journey.start_time, tz=tz)

    return JourneyFeatures(
        journey_id=journey.journey_id,
        timeStopped_sum=stopped_time,
        timeStoppedAtSignalized_sum=sig_time,
        timeStoppedAtUnsignalized_sum=unsig_time,
        journeytime_sum=float(journey.end_time - journey.start_time),
        isSignalized=int(n_signalized),
        turn_sum=len(turns),
        hardbrake_mean=hardbrake_mean,
        hardbrake_min=hardbrake_min,
        hardbrake_count=hardbrake_count,
        hardacc_mean=hardacc_mean,
        hardacc_max=hardacc_max,
        hardacc_count=hardacc_count,
        moving_speed=moving_speed,
        yaw_rate_mean=yaw_rate_mean,
        yaw_rate_max=yaw_rate_max,
        moving_yaw_rate=moving_yaw_rate,
        hour=start_dt.hour,
        dayofweek=start_dt.weekday(),
        year=start_dt.year,
        hardbrake_prop=hardbrake_prop,
        hardacc_prop=hardacc_prop,
        speeding_prop=speeding_prop,
        Residential_prop=land_time[LandUse.RESIDENTIAL] / matched_time,
        Commerical_prop=land_time[LandUse.COMMERCIAL] / matched_time,
        Industrial_prop=land_time[LandUse.INDUSTRIAL] / matched_time,
        Institutional_prop=land_time[LandUse.INSTITUTIONAL] / matched_time,
        C1_prop=ctx_time[ContextClass.C1] / matched_time,
        C2_prop=ctx_time[ContextClass.C2] / matched_time,
        C3C_prop=ctx_time[ContextClass.C3C] / matched_time,
        C3R_prop=ctx_time[ContextClass.C3R] / matched_time,
        C4_prop=ctx_time[ContextClass.C4] / matched_time,
        speeding_level=bin_level(speeding_prop),
    )


def features_to_frame(rows: Iterable[JourneyFeatures]) -> pd.DataFrame:
    """Aggregate rows as a DataFrame with the canonical column order."""
    frame = pd.DataFrame([r.as_row() for r in rows], columns=["journey_id", *TABLE_COLUMNS])
    return frame.sort_values("journey_id", kind="stable").reset_index(drop=True)


@dataclass
class FeatureMatrix:
    """Numeric modeling table: features X, labels y, and row identities."""

    X: np.ndarray  # (n, d) float64
    y: np.ndarray  # (n,) int64 speeding levels
    columns: list
    journey_ids: np.ndarray
    dropped_nonfinite: int = 0


def assemble_dataset(frame: pd.DataFrame, feature_columns: Optional[list] = None) -> FeatureMatrix:
    """Build the modeling matrix from the aggregate table.

    The default selection excludes ``speeding_prop``; configuring it in
    explicitly emits a loud leakage warning since it determines the label.
    Rows containing any non-finite value are dropped and counted.
    """
    columns = list(feature_columns) if feature_columns is not None else list(DEFAULT_FEATURES)
    if "speeding_level" in columns:
        raise ValueError("speeding_level is the label and cannot be a feature column")
    if "speeding_prop" in columns:
        log.warning("LEAKAGE: speeding_prop selected as a feature; it determines the label")
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ValueError(f"feature columns missing from aggregate table: {missing}")
    X = frame[columns].to_numpy(dtype=np.float64)
    y = frame["speeding_level"].to_numpy(dtype=np.int64)
    ids = frame["journey_id"].to_numpy(dtype=object)
    finite = np.isfinite(X).all(axis=1)
    dropped = int((~finite).sum())
    if dropped:
        X, y, ids = X[finite], y[finite], ids[finite]
    if len(X) == 0:
        raise ValueError("no usable rows in the assembled dataset")
    return FeatureMatrix(X=X, y=y, columns=columns, journey_ids=ids, dropped_nonfinite=dropped)
