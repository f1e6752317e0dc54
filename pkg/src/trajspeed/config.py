"""Pipeline configuration: one declarative document for every stage.

Defaults are artifact decisions, not claims about any particular dataset;
every threshold used anywhere in the pipeline is named here so a single YAML
file (plus optional ``--set key=value`` overrides) fully determines a run.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml


@dataclass
class ColumnMap:
    """Input column mapping; defaults mirror common probe-feed field names."""

    journey_id: str = "journeyId"
    point_id: str = "dataPointId"
    timestamp: str = "capturedTimestamp"
    lat: str = "latitude"
    lon: str = "longitude"
    speed: str = "speed"
    heading: str = "heading"
    postal_code: str = "postalCode"  # optional pass-through


@dataclass
class IngestConfig:
    input_format: str = "csv"  # csv | jsonl
    columns: ColumnMap = field(default_factory=ColumnMap)
    gap_split_s: float = 600.0
    min_points: int = 5
    min_duration_s: float = 30.0
    teleport_mph: float = 250.0
    chunk_rows: int = 200_000
    # A buffered journey is finalized once this many input rows pass without
    # new points for it (bounds memory for mildly unsorted feeds).
    flush_after_rows: int = 400_000


@dataclass
class NetworkPropertyMap:
    segment_id: str = "segment_id"
    speed_limit: str = "speed_limit"
    context_class: str = "context_class"
    land_use: str = "land_use"
    functional_class: str = "functional_class"
    intersection_id: str = "intersection_id"
    signalized: str = "signalized"


@dataclass
class MatchConfig:
    match_radius_m: float = 30.0
    heading_tol_deg: float = 45.0
    intersection_radius_m: float = 50.0
    min_coverage: float = 0.5
    cell_size_m: float = 250.0


@dataclass
class KinematicsConfig:
    stop_speed_mph: float = 2.0
    turn_angle_deg: float = 45.0
    turn_window_s: float = 15.0
    turn_min_yaw_dps: float = 8.0


@dataclass
class FeatureConfig:
    hard_brake_mps2: float = 1.0
    hard_acc_mps2: float = 1.0
    timezone: str = "UTC"
    # None selects the default predictor list (all aggregate columns except
    # speeding_prop, which determines the label).
    feature_columns: Optional[list[str]] = None


@dataclass
class SplitConfig:
    test_ratio: float = 0.3
    seed: int = 20191111
    stratified: bool = True


@dataclass
class BoostParams:
    n_trees: int = 50
    max_depth: int = 4
    learning_rate: float = 0.3
    reg_lambda: float = 1.0
    reg_gamma: float = 0.0
    min_child_weight: float = 1.0
    seed: int = 7

    def validate(self) -> None:
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.reg_lambda < 0 or self.reg_gamma < 0 or self.min_child_weight < 0:
            raise ConfigError("regularization parameters must be >= 0")


@dataclass
class ForestParams:
    n_trees: int = 100
    max_depth: int = 12
    mtry: Optional[int] = None  # default ceil(sqrt(d))
    bootstrap: bool = True
    seed: int = 7


@dataclass
class SvmParams:
    C: float = 1.0
    epochs: int = 200


@dataclass
class TuneConfig:
    enabled: bool = False
    max_depth_grid: list[int] = field(default_factory=lambda: [3, 4, 6])
    n_trees_grid: list[int] = field(default_factory=lambda: [25, 50])
    holdout_ratio: float = 0.2
    seed: int = 99


@dataclass
class TrainConfig:
    # One of lda | svm | rf | gbm | xgb | all
    model: str = "xgb"
    xgb: BoostParams = field(default_factory=BoostParams)
    gbm: BoostParams = field(default_factory=lambda: BoostParams(reg_lambda=0.0, reg_gamma=0.0))
    rf: ForestParams = field(default_factory=ForestParams)
    svm: SvmParams = field(default_factory=SvmParams)
    tuning: TuneConfig = field(default_factory=TuneConfig)


@dataclass
class TsneConfig:
    perplexity: float = 30.0
    iters: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    seed: int = 4242


@dataclass
class ExplainConfig:
    shap_sample: int = 5000
    background_sample: int = 1000
    seed: int = 4242
    tsne: TsneConfig = field(default_factory=TsneConfig)
    dependence_features: list[str] = field(
        default_factory=lambda: [
            "moving_speed",
            "timeStoppedAtSignalized_sum",
            "hardbrake_prop",
            "hardacc_prop",
            "Residential_prop",
            "Commerical_prop",
        ]
    )


@dataclass
class HotspotConfig:
    min_points: int = 1000
    statistic: str = "mean"  # mean | p85


@dataclass
class PipelineConfig:
    points: list[str] = field(default_factory=list)
    network: str = ""
    output_dir: str = "out"
    workers: int = 1
    batch_journeys: int = 200
    emit_intermediate: bool = False
    ingest: IngestConfig = field(default_factory=IngestConfig)
    network_properties: NetworkPropertyMap = field(default_factory=NetworkPropertyMap)
    match: MatchConfig = field(default_factory=MatchConfig)
    kinematics: KinematicsConfig = field(default_factory=KinematicsConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    explain: ExplainConfig = field(default_factory=ExplainConfig)
    hotspot: HotspotConfig = field(default_factory=HotspotConfig)


class ConfigError(ValueError):
    """Invalid configuration value or structure."""


_MODEL_NAMES = ("lda", "svm", "rf", "gbm", "xgb", "all")


def _from_dict(cls, data: dict, path: str = ""):
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping at '{path or cls.__name__}'")
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key '{path + key}'")
        ftype = known[key].type
        target = _nested_dataclass(cls, key)
        if target is not None and value is not None:
            kwargs[key] = _from_dict(target, value, path + key + ".")
        else:
            kwargs[key] = value
        del ftype
    return cls(**kwargs)


def _nested_dataclass(cls, key):
    for f in dataclasses.fields(cls):
        if f.name == key:
            default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
            if dataclasses.is_dataclass(default):
                return type(default)
    return None


def config_from_dict(data: dict) -> PipelineConfig:
    cfg = _from_dict(PipelineConfig, data or {})
    validate_config(cfg)
    return cfg


def load_config(path: str) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    return config_from_dict(data)


def config_to_dict(cfg: PipelineConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_hash(cfg: PipelineConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def apply_overrides(cfg: PipelineConfig, overrides: list[str]) -> PipelineConfig:
    """Apply ``dotted.key=value`` overrides in place; values parsed as YAML."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        dotted, raw = item.split("=", 1)
        value = yaml.safe_load(raw)
        parts = dotted.strip().split(".")
        target: Any = cfg
        for part in parts[:-1]:
            if not hasattr(target, part):
                raise ConfigError(f"unknown config key '{dotted}'")
            target = getattr(target, part)
        leaf = parts[-1]
        if not hasattr(target, leaf):
            raise ConfigError(f"unknown config key '{dotted}'")
        current = getattr(target, leaf)
        if dataclasses.is_dataclass(current):
            raise ConfigError(f"'{dotted}' is a section, not a value")
        setattr(target, leaf, value)
    validate_config(cfg)
    return cfg


def validate_config(cfg: PipelineConfig) -> None:
    def positive(name, value):
        if not (isinstance(value, (int, float)) and value > 0):
            raise ConfigError(f"{name} must be positive, got {value!r}")

    positive("ingest.gap_split_s", cfg.ingest.gap_split_s)
    positive("ingest.min_points", cfg.ingest.min_points)
    positive("ingest.min_duration_s", cfg.ingest.min_duration_s)
    positive("ingest.teleport_mph", cfg.ingest.teleport_mph)
    positive("ingest.chunk_rows", cfg.ingest.chunk_rows)
    positive("match.match_radius_m", cfg.match.match_radius_m)
    positive("match.heading_tol_deg", cfg.match.heading_tol_deg)
    positive("match.intersection_radius_m", cfg.match.intersection_radius_m)
    positive("match.cell_size_m", cfg.match.cell_size_m)
    positive("kinematics.stop_speed_mph", cfg.kinematics.stop_speed_mph)
    positive("kinematics.turn_angle_deg", cfg.kinematics.turn_angle_deg)
    positive("kinematics.turn_window_s", cfg.kinematics.turn_window_s)
    positive("kinematics.turn_min_yaw_dps", cfg.kinematics.turn_min_yaw_dps)
    positive("features.hard_brake_mps2", cfg.features.hard_brake_mps2)
    positive("features.hard_acc_mps2", cfg.features.hard_acc_mps2)
    positive("hotspot.min_points", cfg.hotspot.min_points) if cfg.hotspot.min_points else None
    if cfg.hotspot.min_points < 0:
        raise ConfigError("hotspot.min_points must be >= 0")
    if not (0.0 < cfg.split.test_ratio < 1.0):
        raise ConfigError("split.test_ratio must lie in (0, 1)")
    if not (0.0 <= cfg.match.min_coverage <= 1.0):
        raise ConfigError("match.min_coverage must lie in [0, 1]")
    if cfg.ingest.input_format not in ("csv", "jsonl"):
        raise ConfigError(f"unknown input format '{cfg.ingest.input_format}'")
    if cfg.train.model not in _MODEL_NAMES:
        raise ConfigError(f"unknown model '{cfg.train.model}' (expected one of {_MODEL_NAMES})")
    if cfg.hotspot.statistic not in ("mean", "p85"):
        raise ConfigError(f"unknown hotspot statistic '{cfg.hotspot.statistic}'")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    cfg.train.xgb.validate()
    cfg.train.gbm.validate()
    for name, seed in (
        ("split.seed", cfg.split.seed),
        ("train.xgb.seed", cfg.train.xgb.seed),
        ("explain.seed", cfg.explain.seed),
        ("explain.tsne.seed", cfg.explain.tsne.seed),
    ):
        if not isinstance(seed, int):
            raise ConfigError(f"{name} must be an explicit integer seed")
