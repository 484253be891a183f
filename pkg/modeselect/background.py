"""
Static background synthesis from a fitted decomposition.

The default path codes the first frame sparsely in the DMD modes (OMP) and
synthesizes x_BG = real(Phi beta); the low-rank path keeps only the modes whose
continuous-time eigenvalue is near zero.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

import numpy as np

from dmd import DmdModel, dmd_compressed, dmd_exact, split_low_rank_sparse
from frames_io.models import FrameSequence, SnapshotPair
from sensing import make_sensing
from .omp import SparseAmplitudes, omp

logger = logging.getLogger(__name__)

BACKGROUND_SOURCES = ("full_modes", "compressed_modes")
HOLDOUT_STRIDE = 5
# Smallest K whose held-out error is within this fraction of the best wins.
CV_TOLERANCE = 0.02


@dataclass(frozen=True, eq=False)
class BackgroundModel:
    """Real background frame x_BG together with the amplitudes that produced it."""

    background: np.ndarray
    beta: SparseAmplitudes
    source: str = "full_modes"
    selection: str = "omp"

    def __post_init__(self):
        if not np.isfinite(self.background).all():
            raise ValueError("Background model contains non-finite values")

    @property
    def n_pixels(self) -> int:
        return self.background.shape[0]


@dataclass(frozen=True, eq=False)
class CrossValidationResult:
    best_K: int
    errors: Dict[int, float] = field(default_factory=dict)
    holdout: tuple = ()


def _selection_problem(model: DmdModel, source: str, frames: Optional[FrameSequence]):
    if source not in BACKGROUND_SOURCES:
        raise ValueError(f"source must be one of {BACKGROUND_SOURCES}, got '{source}'")
    if source == "compressed_modes":
        if model.modes_compressed is None or model.initial_compressed is None:
            raise ValueError("Compressed selection needs a model with compressed modes (run dmd_compressed)")
        return model.modes_compressed, model.initial_compressed
    if frames is None:
        raise ValueError("Full-mode selection needs the frames to read x_1")
    if frames.n_pixels != model.n_pixels:
        raise ValueError(f"Frames have {frames.n_pixels} pixels, model modes have {model.n_pixels}")
    return model.modes, frames.frame(0)


def select_background(model: DmdModel, K: int = 10, source: str = "full_modes",
                      frames: Optional[FrameSequence] = None) -> BackgroundModel:
    """
    Sparse mode selection followed by background synthesis.

    OMP runs on (Phi, x_1) or, for source="compressed_modes", on (Phi_Y, y_1);
    the background is always synthesized with the full modes.
    """
    if not 1 <= K <= model.k:
        raise ValueError(f"K={K} out of range [1, {model.k}]")
    dictionary, target = _selection_problem(model, source, frames)
    amplitudes = omp(dictionary, target, K)
    background = np.real(model.modes @ amplitudes.beta)
    logger.debug(f"Selected modes {amplitudes.support} (residual {amplitudes.residual_norm:.3g})")
    return BackgroundModel(background=np.ascontiguousarray(background), beta=amplitudes, source=source)


def low_rank_background(model: DmdModel, omega_tol: float = 0.01) -> BackgroundModel:
    """Background from the zero-frequency modes only: real(sum_{|omega_j| <= tol} b_j phi_j)."""
    split = split_low_rank_sparse(model, omega_tol)
    support = list(split.background)
    beta = np.zeros(model.k, dtype=np.complex128)
    beta[support] = model.amplitudes[support]
    background = np.real(model.modes[:, support] @ beta[support])
    amplitudes = SparseAmplitudes(beta=beta, support=tuple(support), residual_norm=float("nan"), K=len(support))
    return BackgroundModel(
        background=np.ascontiguousarray(background), beta=amplitudes, source="full_modes", selection="low_rank"
    )


def holdout_frames(m: int) -> np.ndarray:
    """Every 5th frame (indices 4, 9, ...); sequences shorter than 5 frames hold out the last one."""
    if m < 3:
        raise ValueError(f"Cross-validation needs at least 3 frames, got {m}")
    held = np.arange(HOLDOUT_STRIDE - 1, m, HOLDOUT_STRIDE)
    return held if held.size else np.array([m - 1])


def training_snapshots(frames: FrameSequence, held: np.ndarray) -> SnapshotPair:
    """Consecutive pairs (x_t, x_t+1) in which neither frame is held out."""
    keep = np.ones(frames.n_frames, dtype=bool)
    keep[held] = False
    t = np.flatnonzero(keep[:-1] & keep[1:])
    if t.size == 0:
        raise ValueError(f"No training snapshot pairs left after holding out frames {held.tolist()}")
    return SnapshotPair(frames.pixels[:, t], frames.pixels[:, t + 1])


def _refit(model: DmdModel, pairs: SnapshotPair) -> DmdModel:
    """Refit the decomposition on training pairs with the same method, sensing and rank."""
    rank = min(model.k, pairs.n_snapshots)
    if model.method == "exact" or model.sensing is None:
        return dmd_exact(pairs, rank, model.frame_interval)
    params = model.sensing
    C = make_sensing(params["kind"], params["p"], params["n"], params["seed"], params["s"])
    return dmd_compressed(pairs, C, min(rank, C.p), model.diagnostics.get("amplitude_mode", "full"),
                          model.frame_interval)


def select_k_cross_validation(model: DmdModel, frames: FrameSequence, k_grid: Optional[Iterable[int]] = None,
                              source: str = "full_modes") -> CrossValidationResult:
    """
    Choose K by reconstruction error on held-out frames.

    The decomposition is refit on snapshot pairs that avoid the held-out frames.
    For each K the sparse amplitudes of that fit are propagated with its eigenvalues
    to the held-out frames. The smallest K whose mean relative error is within
    CV_TOLERANCE of the best one wins.
    """
    grid = sorted(set(range(1, model.k + 1) if k_grid is None else (int(K) for K in k_grid)))
    if not grid or grid[0] < 1 or grid[-1] > model.k:
        raise ValueError(f"K grid must lie in [1, {model.k}], got {grid}")

    held = holdout_frames(frames.n_frames)
    fitted = _refit(model, training_snapshots(frames, held))
    dictionary, target = _selection_problem(fitted, source, frames)
    observed = frames.pixels[:, held]
    observed_norms = np.maximum(np.linalg.norm(observed, axis=0), np.finfo(float).tiny)
    powers = fitted.lambdas[:, None] ** held[None, :]

    errors: Dict[int, float] = {}
    for K in grid:
        beta = omp(dictionary, target, min(K, fitted.k)).beta
        predicted = np.real(fitted.modes @ (beta[:, None] * powers))
        errors[K] = float(np.mean(np.linalg.norm(observed - predicted, axis=0) / observed_norms))

    best_error = min(errors.values())
    best_K = next(K for K in grid if errors[K] <= best_error * (1.0 + CV_TOLERANCE))
    logger.info(f"Cross-validated K={best_K} (held-out error {errors[best_K]:.4g}, refit k={fitted.k})")
    return CrossValidationResult(best_K=best_K, errors=errors, holdout=tuple(int(t) for t in held))
