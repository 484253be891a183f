"""
Pydantic models for pipeline configuration and the JSON reports.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from jsonschema import Draft202012Validator
from pydantic import BaseModel, ConfigDict, Field, field_validator

import config


class PipelineConfig(BaseModel):
    """Settings of one background-modeling run (CLI flags or a JSON file)."""

    model_config = ConfigDict(extra="forbid")

    method: Literal["exact", "compressed"] = config.DEFAULT_METHOD
    sensing: Literal["gaussian", "sparse", "single_pixel", "srft"] = config.DEFAULT_SENSING
    p: int = Field(default=config.DEFAULT_P, ge=1)
    sparsity_s: Optional[float] = Field(default=None, gt=1)
    seed: int = Field(default=config.DEFAULT_SEED, ge=0, lt=2 ** 64)
    rank: Union[Literal["auto"], int] = config.DEFAULT_RANK
    K: Union[Literal["cv"], int] = config.DEFAULT_K
    amplitude_mode: Literal["full", "compressed"] = config.DEFAULT_AMPLITUDE_MODE
    selection: Literal["omp", "low_rank"] = "omp"
    omega_tol: float = Field(default=config.DEFAULT_OMEGA_TOL, ge=0)
    tau: float = Field(default=config.DEFAULT_TAU, gt=0)
    postfilter: Literal["none", "median3"] = config.DEFAULT_POSTFILTER
    batch_size: int = Field(default=config.DEFAULT_BATCH_SIZE, ge=2)
    threads: int = Field(default_factory=lambda: max(config.THREADS, 1), ge=1)
    frame_interval: float = Field(default=config.DEFAULT_FRAME_INTERVAL, gt=0)

    @field_validator("sensing", mode="before")
    @classmethod
    def _sensing_alias(cls, value):
        if isinstance(value, str) and value.lower() in ("spixel", "single-pixel"):
            return "single_pixel"
        return value

    @field_validator("rank", "K")
    @classmethod
    def _positive(cls, value):
        if isinstance(value, int) and value < 1:
            raise ValueError("must be a positive integer")
        return value

    @classmethod
    def from_json_file(cls, path: Union[str, Path]) -> "PipelineConfig":
        """Load a config file; missing keys take their defaults."""
        with open(path, 'r', encoding='utf-8') as f:
            return cls.model_validate(json.load(f))


class FrameScore(BaseModel):
    frame: int
    recall: float
    precision: float
    f_measure: float


class ThresholdPoint(BaseModel):
    tau: float
    f_measure: float
    foreground_pixels: int


class ThresholdSweep(BaseModel):
    points: List[ThresholdPoint]
    # Foreground pixel count is nonincreasing along the ascending tau grid.
    monotone: bool
    best_tau: float
    best_f_measure: float


class EvalReport(BaseModel):
    tp: int = Field(ge=0)
    fp: int = Field(ge=0)
    fn: int = Field(ge=0)
    tn: int = Field(ge=0)
    recall: float = Field(ge=0, le=1)
    precision: float = Field(ge=0, le=1)
    f_measure: float = Field(ge=0, le=1)
    per_frame: List[FrameScore] = Field(default_factory=list)
    threshold_sweep: Optional[List[ThresholdPoint]] = None


class BatchReport(BaseModel):
    index: int
    start_frame: int
    n_frames: int
    method: str
    k: int
    K: int
    lambdas: List[List[float]]
    omegas: List[List[Optional[float]]]
    amplitude_magnitudes: List[float]
    support: List[int]
    beta_magnitudes: List[float]
    zero_modes: List[int]
    sensing: Optional[Dict[str, Any]] = None
    timings_ms: Dict[str, float]
    diagnostics: Dict[str, Any] = Field(default_factory=dict)
    cv_errors: Optional[Dict[int, float]] = None
    mode_dynamics: Optional[List[List[float]]] = None


class RunReport(BaseModel):
    command: str = "run"
    config: PipelineConfig
    width: int
    height: int
    n_frames: int
    batches: List[BatchReport]
    metrics: Optional[EvalReport] = None
    total_ms: float
    warnings: List[str] = Field(default_factory=list)


class BenchResult(BaseModel):
    resolution: Tuple[int, int]
    m: int
    method: str
    stage_times_ms: Dict[str, float]
    total_ms: float
    fps: float = Field(gt=0)
    repeats: int


class BenchReport(BaseModel):
    command: str = "bench"
    threads: int
    results: List[BenchResult]


REPORT_MODELS = {
    "run_report": RunReport,
    "eval_report": EvalReport,
    "bench_report": BenchReport,
}


def load_schema(name: str) -> Dict[str, Any]:
    """Load a published report schema from config.SCHEMA_DIR."""
    if name not in REPORT_MODELS:
        raise ValueError(f"Unknown report schema '{name}', expected one of {sorted(REPORT_MODELS)}")
    path = Path(config.SCHEMA_DIR) / f"{name}.schema.json"
    if not path.exists():
        raise FileNotFoundError(f"Schema file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def validate_report(name: str, payload: Union[BaseModel, Dict[str, Any]]) -> None:
    """
    Check a report against its published schema.

    Models are dumped in JSON mode first, so the check sees what is written to disk.

    Raises:
        jsonschema.ValidationError: the report does not match the schema
    """
    if isinstance(payload, BaseModel):
        payload = json.loads(payload.model_dump_json())
    Draft202012Validator(load_schema(name)).validate(payload)
