"""
Orthogonal matching pursuit over a (complex) mode dictionary.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from numkernel import lstsq

logger = logging.getLogger(__name__)

RESIDUAL_STOP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SparseAmplitudes:
    """Sparse code beta with at most K nonzeros."""

    beta: np.ndarray
    support: Tuple[int, ...]
    residual_norm: float
    K: int
    # Residual norm before any selection followed by the norm after each step.
    residual_history: Tuple[float, ...] = field(default=(), compare=False)

    @property
    def nonzeros(self) -> int:
        return int(np.count_nonzero(self.beta))


def omp(dictionary: np.ndarray, target: np.ndarray, K: int) -> SparseAmplitudes:
    """
    Greedy sparse coding of target in the columns of dictionary.

    Each step picks the column with the largest |<d_j / ||d_j||, r>| (ties go to the
    lowest index), re-solves least squares on the selected columns and updates the
    residual. Stops after K picks or once ||r|| <= 1e-10 * ||target||.

    Args:
        dictionary: rows x k matrix with nonzero columns
        target: Vector of length rows
        K: Maximum number of nonzeros, 1 <= K <= k

    Returns:
        SparseAmplitudes with beta of length k
    """
    dictionary = np.asarray(dictionary)
    target = np.asarray(target)
    if dictionary.ndim != 2:
        raise ValueError(f"Dictionary must be 2-D, got shape {dictionary.shape}")
    rows, k = dictionary.shape
    if target.shape != (rows,):
        raise ValueError(f"Target has shape {target.shape}, expected ({rows},)")
    if not 1 <= K <= k:
        raise ValueError(f"K={K} out of range [1, {k}]")

    norms = np.linalg.norm(dictionary, axis=0)
    if np.any(norms == 0):
        raise ValueError(f"Dictionary has zero column(s) at {np.flatnonzero(norms == 0).tolist()}")
    normalized = dictionary / norms

    target_norm = float(np.linalg.norm(target))
    stop = RESIDUAL_STOP_TOL * target_norm
    residual = target.astype(np.result_type(dictionary, target, np.float64))
    support: List[int] = []
    coefficients = np.zeros(0, dtype=residual.dtype)
    history = [target_norm]

    for _ in range(K):
        if history[-1] <= stop:
            break
        correlation = np.abs(normalized.conj().T @ residual)
        correlation[support] = -1.0
        j = int(np.argmax(correlation))
        support.append(j)
        sub = dictionary[:, support]
        coefficients = lstsq(sub, target)
        residual = target - sub @ coefficients
        history.append(float(np.linalg.norm(residual)))

    beta = np.zeros(k, dtype=np.result_type(coefficients, np.complex128))
    beta[support] = coefficients
    return SparseAmplitudes(
        beta=beta,
        support=tuple(support),
        residual_norm=history[-1],
        K=K,
        residual_history=tuple(history),
    )
