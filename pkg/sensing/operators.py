"""
Measurement operators C (p x n) that compress snapshot matrices, Y = C X.

Four families are supported: dense Gaussian, very sparse random projections,
single-pixel row sampling and the subsampled random Fourier transform (C = R F D).
No 1/sqrt(p) scaling is applied; DMD eigenvalues are invariant to it.

Randomness comes from numpy's counter-based Philox generator keyed by the seed.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Union

import numpy as np
import scipy.fft
import scipy.sparse as sp

logger = logging.getLogger(__name__)


class SensingKind(str, Enum):
    GAUSSIAN = "gaussian"
    SPARSE = "sparse"
    SINGLE_PIXEL = "single_pixel"
    SRFT = "srft"

    @classmethod
    def parse(cls, value: Union[str, "SensingKind"]) -> "SensingKind":
        if isinstance(value, cls):
            return value
        aliases = {"spixel": cls.SINGLE_PIXEL, "single-pixel": cls.SINGLE_PIXEL}
        key = str(value).lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"Unknown sensing kind '{value}'") from None


def default_sparsity(n: int) -> float:
    """Very sparse sampling rate s = n / log(n)."""
    return n / math.log(n)


def required_measurements(k: int, n: int) -> float:
    """Sample-count guidance: p should exceed k * log(n / k)."""
    return k * math.log(n / k) if n > k else float(k)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True, eq=False)
class SensingOperator:
    """Immutable measurement operator; the matrix itself is never serialized."""

    kind: SensingKind
    p: int
    n: int
    seed: int
    sparsity_s: Optional[float] = None
    row_indices: Optional[np.ndarray] = None
    diagonal_phases: Optional[np.ndarray] = None
    matrix: Any = field(default=None, repr=False, compare=False)

    @property
    def produces_complex(self) -> bool:
        return self.kind is SensingKind.SRFT

    def parameters(self) -> Dict[str, Any]:
        """Reproducibility record for run reports."""
        return {
            "kind": self.kind.value,
            "p": self.p,
            "n": self.n,
            "seed": self.seed,
            "s": self.sparsity_s,
        }

    def to_dense(self) -> np.ndarray:
        """Materialize C (intended for small n only)."""
        return apply(self, np.eye(self.n))


def _sparse_matrix(p: int, n: int, s: float, rng: np.random.Generator) -> sp.csr_matrix:
    """p x n matrix with entries +1, 0, -1 at rates 1/(2s), 1 - 1/s, 1/(2s)."""
    density = 1.0 / s
    indptr = [0]
    indices = []
    for _ in range(p):
        nnz = rng.binomial(n, density)
        cols = np.sort(rng.choice(n, size=nnz, replace=False))
        indices.append(cols)
        indptr.append(indptr[-1] + nnz)
    indices = np.concatenate(indices) if indices else np.empty(0, dtype=np.int64)
    data = rng.choice(np.array([-1.0, 1.0]), size=indices.size)
    return sp.csr_matrix((data, indices, np.asarray(indptr)), shape=(p, n))


def make_sensing(kind: Union[str, SensingKind], p: int, n: int, seed: int = 0,
                 sparsity_s: Optional[float] = None) -> SensingOperator:
    """
    Construct a seeded measurement operator.

    Args:
        kind: gaussian, sparse, single_pixel (alias spixel) or srft
        p: Number of measurements, 1 <= p <= n
        n: Ambient dimension (pixels per frame)
        seed: 64-bit unsigned seed
        sparsity_s: Sparsity factor s > 1 (sparse kind only, default n / log n)

    Returns:
        SensingOperator whose action is deterministic in (kind, p, n, seed, s)
    """
    kind = SensingKind.parse(kind)
    if p < 1:
        raise ValueError(f"Number of measurements p must be at least 1, got {p}")
    if p > n:
        raise ValueError(f"Number of measurements p={p} exceeds ambient dimension n={n}")
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}")

    rng = make_rng(seed)

    if kind is SensingKind.GAUSSIAN:
        return SensingOperator(kind, p, n, seed, matrix=rng.standard_normal((p, n)))

    if kind is SensingKind.SPARSE:
        s = default_sparsity(n) if sparsity_s is None else float(sparsity_s)
        if not s > 1:
            raise ValueError(f"Sparsity factor s must exceed 1, got {s}")
        return SensingOperator(kind, p, n, seed, sparsity_s=s, matrix=_sparse_matrix(p, n, s, rng))

    if kind is SensingKind.SINGLE_PIXEL:
        rows = rng.choice(n, size=p, replace=False)
        return SensingOperator(kind, p, n, seed, row_indices=rows)

    phases = np.exp(2j * np.pi * rng.random(n))
    rows = rng.choice(n, size=p, replace=False)
    return SensingOperator(kind, p, n, seed, row_indices=rows, diagonal_phases=phases)


def apply(C: SensingOperator, M: np.ndarray) -> np.ndarray:
    """
    Compute C M for an n x q matrix M.

    single_pixel gathers rows, sparse multiplies a CSR matrix, srft scales by D,
    runs a length-n FFT down each column and gathers rows (complex output).
    """
    M = np.asarray(M)
    if M.ndim == 1:
        M = M[:, None]
    if M.shape[0] != C.n:
        raise ValueError(f"Sensing operator expects {C.n} rows, got {M.shape[0]}")
    # Single-pixel sampling only reads p rows, so only those are checked.
    if C.kind is SensingKind.SINGLE_PIXEL:
        gathered = M[C.row_indices, :]
        if not np.isfinite(gathered).all():
            raise ValueError("Cannot sense a matrix with non-finite entries")
        return gathered
    if not np.isfinite(M).all():
        raise ValueError("Cannot sense a matrix with non-finite entries")

    if C.kind is SensingKind.SPARSE:
        return np.asarray(C.matrix @ M)
    if C.kind is SensingKind.GAUSSIAN:
        return C.matrix @ M
    spectrum = scipy.fft.fft(M * C.diagonal_phases[:, None], axis=0)
    return spectrum[C.row_indices, :]
