"""Exact and compressed dynamic mode decomposition."""

from .decomposition import (
    DmdModel,
    LowRankSparseSplit,
    dmd_exact,
    dmd_compressed,
    vandermonde,
    continuous_eigs,
    reconstruct,
    split_low_rank_sparse,
    reconstruct_split,
    mode_dynamics,
    model_report,
    save_modes,
)

__all__ = [
    'DmdModel', 'LowRankSparseSplit',
    'dmd_exact', 'dmd_compressed', 'vandermonde', 'continuous_eigs', 'reconstruct',
    'split_low_rank_sparse', 'reconstruct_split', 'mode_dynamics', 'model_report', 'save_modes',
]
