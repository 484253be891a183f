"""Sparse mode selection and background synthesis."""

from .omp import SparseAmplitudes, omp
from .background import (
    BackgroundModel,
    CrossValidationResult,
    select_background,
    low_rank_background,
    select_k_cross_validation,
    holdout_frames,
    training_snapshots,
)

__all__ = [
    'SparseAmplitudes', 'omp',
    'BackgroundModel', 'CrossValidationResult',
    'select_background', 'low_rank_background', 'select_k_cross_validation', 'holdout_frames',
    'training_snapshots',
]
