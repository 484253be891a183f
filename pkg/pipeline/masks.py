"""
Foreground masks, detection metrics and threshold sweeps.
"""
import logging
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from frames_io.models import FrameSequence, ForegroundMask
from modeselect import BackgroundModel
from .schemas import EvalReport, FrameScore, ThresholdPoint, ThresholdSweep

logger = logging.getLogger(__name__)

POSTFILTERS = ("none", "median3")


def _background_vector(background: Union[BackgroundModel, np.ndarray]) -> np.ndarray:
    if isinstance(background, BackgroundModel):
        return background.background
    return np.asarray(background, dtype=np.float64)


def _median3(bits: np.ndarray, width: int, height: int) -> np.ndarray:
    """3x3 spatial median of every frame of an n x m mask."""
    stack = bits.T.reshape(-1, height, width).astype(np.uint8)
    filtered = ndimage.median_filter(stack, size=(1, 3, 3), mode="nearest")
    return filtered.reshape(stack.shape[0], -1).T.astype(bool)


def _threshold(frames: FrameSequence, background: np.ndarray, tau: float, postfilter: str) -> np.ndarray:
    if background.shape != (frames.n_pixels,):
        raise ValueError(f"Background has shape {background.shape}, expected ({frames.n_pixels},)")
    if not tau > 0:
        raise ValueError(f"Threshold tau must be positive, got {tau}")
    if postfilter not in POSTFILTERS:
        raise ValueError(f"postfilter must be one of {POSTFILTERS}, got '{postfilter}'")
    # Per-pixel Euclidean distance of scalar intensities is the absolute difference.
    bits = np.abs(frames.pixels - background[:, None]) > tau
    if postfilter == "median3":
        bits = _median3(bits, frames.width, frames.height)
    return bits


def foreground_mask(frames: FrameSequence, background: Union[BackgroundModel, np.ndarray],
                    tau: float = 25.0, postfilter: str = "none") -> ForegroundMask:
    """
    Threshold |x_jt - x_BG_j| > tau for every pixel j and frame t.

    Args:
        frames: Frames of one batch
        background: BackgroundModel or background vector of length n
        tau: Positive threshold in gray levels
        postfilter: "none" or "median3" (3x3 spatial median after thresholding)
    """
    bits = _threshold(frames, _background_vector(background), tau, postfilter)
    return ForegroundMask(bits, tau, frames.width, frames.height)


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator > 0 else 0.0


def _scores(tp: int, fp: int, fn: int) -> Tuple[float, float, float]:
    recall = _ratio(tp, tp + fn)
    precision = _ratio(tp, tp + fp)
    f_measure = _ratio(2 * precision * recall, precision + recall)
    return recall, precision, f_measure


def _confusion(bits: np.ndarray, truth: np.ndarray):
    tp = np.count_nonzero(bits & truth, axis=0)
    fp = np.count_nonzero(bits & ~truth, axis=0)
    fn = np.count_nonzero(~bits & truth, axis=0)
    tn = np.count_nonzero(~bits & ~truth, axis=0)
    return tp, fp, fn, tn


def evaluate(mask: ForegroundMask, truth: ForegroundMask, per_frame: bool = True) -> EvalReport:
    """
    Pooled confusion counts with recall, precision and F-measure.

    Ratios with a zero denominator are reported as 0.
    """
    if mask.bits.shape != truth.bits.shape:
        raise ValueError(f"Mask shape {mask.bits.shape} differs from truth shape {truth.bits.shape}")

    tp, fp, fn, tn = _confusion(mask.bits, truth.bits)
    totals = [int(v.sum()) for v in (tp, fp, fn, tn)]
    recall, precision, f_measure = _scores(*totals[:3])

    frames: List[FrameScore] = []
    if per_frame:
        for t in range(mask.n_frames):
            r, p, f = _scores(int(tp[t]), int(fp[t]), int(fn[t]))
            frames.append(FrameScore(frame=t, recall=r, precision=p, f_measure=f))

    return EvalReport(
        tp=totals[0], fp=totals[1], fn=totals[2], tn=totals[3],
        recall=recall, precision=precision, f_measure=f_measure,
        per_frame=frames,
    )


def sweep_segments(segments: Sequence[Tuple[FrameSequence, np.ndarray, np.ndarray]], tau_grid: Iterable[float],
                   postfilter: str = "none") -> ThresholdSweep:
    """
    Pooled F-measure over (frames, background, truth bits) segments for each tau.
    """
    grid = sorted(float(tau) for tau in tau_grid)
    if not grid:
        raise ValueError("Threshold grid is empty")
    if grid[0] <= 0:
        raise ValueError(f"Threshold grid must be positive, got {grid[0]}")

    points = []
    for tau in grid:
        tp = fp = fn = foreground = 0
        for frames, background, truth_bits in segments:
            if truth_bits.shape != frames.pixels.shape:
                raise ValueError(f"Truth shape {truth_bits.shape} differs from frames {frames.pixels.shape}")
            bits = _threshold(frames, background, tau, postfilter)
            counts = _confusion(bits, truth_bits)
            tp += int(counts[0].sum())
            fp += int(counts[1].sum())
            fn += int(counts[2].sum())
            foreground += int(bits.sum())
        points.append(ThresholdPoint(tau=tau, f_measure=_scores(tp, fp, fn)[2], foreground_pixels=foreground))

    counts = [point.foreground_pixels for point in points]
    monotone = all(a >= b for a, b in zip(counts, counts[1:]))
    if not monotone:
        logger.warning("Foreground pixel count is not monotone in tau (post-filtering can cause this)")
    best = max(points, key=lambda point: point.f_measure)
    return ThresholdSweep(points=points, monotone=monotone, best_tau=best.tau, best_f_measure=best.f_measure)


def sweep_threshold(frames: FrameSequence, background: Union[BackgroundModel, np.ndarray],
                    truth: ForegroundMask, tau_grid: Iterable[float], postfilter: str = "none") -> ThresholdSweep:
    """F-measure for every threshold of tau_grid on one batch."""
    return sweep_segments([(frames, _background_vector(background), truth.bits)], tau_grid, postfilter)
