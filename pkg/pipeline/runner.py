"""
Batch background modeling: per batch decomposition, background selection and
foreground masks, with optional evaluation against ground truth.

Batches are independent; they run on a thread pool and are reassembled in
batch order, so results do not depend on completion order.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional

import numpy as np

from dmd import DmdModel, dmd_compressed, dmd_exact, model_report, split_low_rank_sparse
from frames_io import FrameSequence, ForegroundMask, batch, split_snapshots
from modeselect import (
    BackgroundModel,
    CrossValidationResult,
    low_rank_background,
    select_background,
    select_k_cross_validation,
)
from numkernel import rounded, stage_timer
from sensing import make_sensing, required_measurements
from .masks import evaluate, foreground_mask, sweep_segments
from .schemas import BatchReport, EvalReport, PipelineConfig, RunReport, ThresholdSweep

logger = logging.getLogger(__name__)


class BatchError(RuntimeError):
    """A batch failed; the run is aborted."""

    def __init__(self, batch_index: int, cause: BaseException):
        super().__init__(f"Batch {batch_index} failed: {type(cause).__name__}: {cause}")
        self.batch_index = batch_index
        self.cause = cause


@dataclass
class BatchResult:
    index: int
    start_frame: int
    frames: FrameSequence
    model: DmdModel
    background: Optional[BackgroundModel] = None
    mask: Optional[ForegroundMask] = None
    K: int = 0
    cv: Optional[CrossValidationResult] = None
    timings: dict = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)


@dataclass
class PipelineResult:
    batches: List[BatchResult]
    evaluation: Optional[EvalReport]
    report: RunReport

    @property
    def masks(self) -> List[ForegroundMask]:
        return [b.mask for b in self.batches]

    @property
    def backgrounds(self) -> List[BackgroundModel]:
        return [b.background for b in self.batches]


def _warn(warnings: List[str], message: str) -> None:
    logger.warning(message)
    warnings.append(message)


def _check_guidance(p: int, k: int, n: int, warnings: List[str]) -> None:
    needed = required_measurements(k, n)
    if not p > needed:
        _warn(warnings, f"p={p} does not satisfy p > k*log(n/k) = {needed:.1f} for k={k}, n={n}")


def decompose_batch(frames: FrameSequence, cfg: PipelineConfig, index: int = 0,
                    warnings: Optional[List[str]] = None, timings: Optional[dict] = None) -> DmdModel:
    """Run exact or compressed DMD on one batch with the batch's derived seed."""
    warnings = [] if warnings is None else warnings
    snapshots = split_snapshots(frames)
    if cfg.method == "exact":
        return dmd_exact(snapshots, cfg.rank, frames.frame_interval)

    p = cfg.p
    if p > frames.n_pixels:
        _warn(warnings, f"p={p} exceeds pixels per frame n={frames.n_pixels}; using p=n")
        p = frames.n_pixels
    with stage_timer(timings, "sensing"):
        sensing = make_sensing(cfg.sensing, p, frames.n_pixels, cfg.seed + index, cfg.sparsity_s)
    model = dmd_compressed(snapshots, sensing, cfg.rank, cfg.amplitude_mode, frames.frame_interval)
    if cfg.rank == "auto":
        _check_guidance(p, model.k, frames.n_pixels, warnings)
    return model


def _process_batch(index: int, start: int, frames: FrameSequence, cfg: PipelineConfig,
                   with_masks: bool, select: bool = True) -> BatchResult:
    warnings: List[str] = []
    timings: dict = {}
    model = decompose_batch(frames, cfg, index, warnings, timings)
    timings.update(model.timings)
    result = BatchResult(index=index, start_frame=start, frames=frames, model=model,
                         timings=timings, warnings=warnings)
    if not select:
        return result

    source = "compressed_modes" if cfg.method == "compressed" and cfg.amplitude_mode == "compressed" else "full_modes"
    with stage_timer(timings, "omp"):
        if cfg.selection == "low_rank":
            background = low_rank_background(model, cfg.omega_tol)
            K = len(background.beta.support)
        else:
            if cfg.K == "cv":
                result.cv = select_k_cross_validation(model, frames, source=source)
                K = result.cv.best_K
            else:
                K = min(cfg.K, model.k)
                if K < cfg.K:
                    _warn(warnings, f"Batch {index}: K={cfg.K} exceeds k={model.k}; using K={K}")
            background = select_background(model, K, source, frames)
    result.background = background
    result.K = K

    if with_masks:
        with stage_timer(timings, "mask"):
            result.mask = foreground_mask(frames, background, cfg.tau, cfg.postfilter)
    return result


def _batch_report(result: BatchResult, cfg: PipelineConfig, include_dynamics: bool = False) -> BatchReport:
    summary = model_report(result.model, include_dynamics=include_dynamics)
    zero_modes = split_low_rank_sparse(result.model, cfg.omega_tol).background
    support, beta = [], []
    if result.background is not None:
        support = list(result.background.beta.support)
        beta = [float(v) for v in np.abs(result.background.beta.beta)]
    return BatchReport(
        index=result.index,
        start_frame=result.start_frame,
        n_frames=result.frames.n_frames,
        method=summary["method"],
        k=summary["k"],
        K=result.K,
        lambdas=summary["lambdas"],
        omegas=summary["omegas"],
        amplitude_magnitudes=summary["amplitude_magnitudes"],
        support=support,
        beta_magnitudes=beta,
        zero_modes=list(zero_modes),
        sensing=summary["sensing"],
        timings_ms=rounded(result.timings),
        diagnostics=summary["diagnostics"],
        cv_errors=None if result.cv is None else result.cv.errors,
        mode_dynamics=summary.get("mode_dynamics"),
    )


def _run_batches(frames: FrameSequence, cfg: PipelineConfig, with_masks: bool,
                 select: bool = True) -> List[BatchResult]:
    batches = batch(frames, cfg.batch_size)
    starts = np.cumsum([0] + [b.n_frames for b in batches[:-1]])
    workers = max(1, min(cfg.threads, len(batches)))
    logger.info(f"Processing {len(batches)} batch(es) of up to {cfg.batch_size} frames on {workers} thread(s)")

    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [
            executor.submit(_process_batch, index, int(start), frames_i, cfg, with_masks, select)
            for index, (start, frames_i) in enumerate(zip(starts, batches))
        ]
        results = []
        for index, future in enumerate(futures):
            try:
                results.append(future.result())
            except Exception as e:
                for pending in futures[index + 1:]:
                    pending.cancel()
                raise BatchError(index, e) from e
    return results


def _startup_checks(frames: FrameSequence, cfg: PipelineConfig) -> List[str]:
    warnings: List[str] = []
    if cfg.method == "compressed" and isinstance(cfg.rank, int):
        _check_guidance(min(cfg.p, frames.n_pixels), cfg.rank, frames.n_pixels, warnings)
    return warnings


def decompose_batches(frames: FrameSequence, cfg: PipelineConfig, include_dynamics: bool = False) -> PipelineResult:
    """Decompose every batch without background selection or masks (decompose command)."""
    start = time.perf_counter()
    warnings = _startup_checks(frames, cfg)
    results = _run_batches(frames, cfg, with_masks=False, select=False)
    for result in results:
        warnings.extend(result.warnings)
    report = RunReport(
        command="decompose",
        config=cfg,
        width=frames.width,
        height=frames.height,
        n_frames=frames.n_frames,
        batches=[_batch_report(r, cfg, include_dynamics) for r in results],
        total_ms=round((time.perf_counter() - start) * 1000.0, 3),
        warnings=warnings,
    )
    return PipelineResult(batches=results, evaluation=None, report=report)


def run_pipeline(frames: FrameSequence, cfg: Optional[PipelineConfig] = None,
                 truth: Optional[ForegroundMask] = None, with_masks: bool = True,
                 command: str = "run") -> PipelineResult:
    """
    Batch cDMD -> background -> foreground masks (-> metrics when truth is given).

    Args:
        frames: Full frame sequence
        cfg: Pipeline configuration (defaults to the evaluation settings)
        truth: Optional ground-truth mask with one column per frame
        with_masks: Skip mask computation when False (background command)
        command: Command name recorded in the report

    Returns:
        PipelineResult with per-batch masks/backgrounds, evaluation and RunReport
    """
    cfg = cfg or PipelineConfig()
    if truth is not None and truth.bits.shape != frames.pixels.shape:
        raise ValueError(f"Truth mask shape {truth.bits.shape} differs from frames {frames.pixels.shape}")

    start = time.perf_counter()
    warnings = _startup_checks(frames, cfg)
    results = _run_batches(frames, cfg, with_masks)
    for result in results:
        warnings.extend(result.warnings)

    evaluation = None
    if truth is not None and with_masks:
        combined = ForegroundMask(
            np.concatenate([r.mask.bits for r in results], axis=1), cfg.tau, frames.width, frames.height
        )
        evaluation = evaluate(combined, truth)
        logger.info(
            f"Recall={evaluation.recall:.3f} Precision={evaluation.precision:.3f} F={evaluation.f_measure:.3f}"
        )

    report = RunReport(
        command=command,
        config=cfg,
        width=frames.width,
        height=frames.height,
        n_frames=frames.n_frames,
        batches=[_batch_report(r, cfg) for r in results],
        metrics=evaluation,
        total_ms=round((time.perf_counter() - start) * 1000.0, 3),
        warnings=warnings,
    )
    return PipelineResult(batches=results, evaluation=evaluation, report=report)


def sweep_pipeline(result: PipelineResult, truth: ForegroundMask, tau_grid: Iterable[float],
                   postfilter: str = "none") -> ThresholdSweep:
    """Threshold sweep pooled over every batch of a finished run."""
    segments = []
    for b in result.batches:
        if b.background is None:
            raise ValueError(f"Batch {b.index} has no background model")
        stop = b.start_frame + b.frames.n_frames
        segments.append((b.frames, b.background.background, truth.bits[:, b.start_frame:stop]))
    return sweep_segments(segments, tau_grid, postfilter)


def default_tau_grid(step: float = 2.5, upper: float = 100.0) -> List[float]:
    """Evenly spaced thresholds (step, 2*step, ..., upper)."""
    return [step * i for i in range(1, int(math.floor(upper / step)) + 1)]
