"""Dense linear-algebra kernels and stage timing."""

from .linalg import (
    NumericalError,
    TruncatedSvd,
    EigenDecomposition,
    thin_svd,
    svd_truncated,
    eig_dense,
    lstsq,
    optimal_rank,
    hard_threshold_coefficient,
)
from .timing import stage_timer, rounded

__all__ = [
    'NumericalError', 'TruncatedSvd', 'EigenDecomposition',
    'thin_svd', 'svd_truncated', 'eig_dense', 'lstsq', 'optimal_rank', 'hard_threshold_coefficient',
    'stage_timer', 'rounded',
]
