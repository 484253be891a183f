"""Batch background modeling, foreground masks and evaluation."""

from .schemas import (
    PipelineConfig,
    FrameScore,
    ThresholdPoint,
    ThresholdSweep,
    EvalReport,
    BatchReport,
    RunReport,
    BenchResult,
    BenchReport,
    REPORT_MODELS,
    load_schema,
    validate_report,
)
from .masks import POSTFILTERS, foreground_mask, evaluate, sweep_threshold, sweep_segments
from .runner import (
    BatchError,
    BatchResult,
    PipelineResult,
    decompose_batch,
    decompose_batches,
    run_pipeline,
    sweep_pipeline,
    default_tau_grid,
)

__all__ = [
    'PipelineConfig', 'FrameScore', 'ThresholdPoint', 'ThresholdSweep', 'EvalReport',
    'BatchReport', 'RunReport', 'BenchResult', 'BenchReport', 'REPORT_MODELS', 'load_schema',
    'validate_report',
    'POSTFILTERS', 'foreground_mask', 'evaluate', 'sweep_threshold', 'sweep_segments',
    'BatchError', 'BatchResult', 'PipelineResult',
    'decompose_batch', 'decompose_batches', 'run_pipeline', 'sweep_pipeline', 'default_tau_grid',
]
