"""
Dense linear-algebra primitives for (compressed) DMD: truncated SVD, small
eigendecompositions, minimum-norm least squares and hard-threshold rank selection.

All routines are deterministic LAPACK calls through scipy.linalg.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

EIG_RESIDUAL_TOL = 1e-8
ORTHONORMAL_TOL = 1e-10


class NumericalError(RuntimeError):
    """A factorization failed to converge or produced unusable output."""


def _check_finite(M: np.ndarray, name: str) -> None:
    if not np.isfinite(M).all():
        raise ValueError(f"{name} contains non-finite entries")


@dataclass(frozen=True, eq=False)
class TruncatedSvd:
    """Leading singular triplets M ~ U diag(S) V*."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    # Full singular spectrum of the factorized matrix (used for rank selection).
    spectrum: np.ndarray = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return self.S.shape[0]

    def truncate(self, k: int) -> "TruncatedSvd":
        if not 1 <= k <= self.k:
            raise ValueError(f"Cannot truncate SVD of rank {self.k} to k={k}")
        return TruncatedSvd(self.U[:, :k], self.S[:k], self.V[:, :k], self.spectrum)

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.S) @ self.V.conj().T


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenpairs A W = W diag(lambdas) with unit-norm eigenvector columns."""

    W: np.ndarray
    lambdas: np.ndarray
    max_residual: float = 0.0
    # Set when some eigenpair residual exceeds tolerance (defective or ill-conditioned A).
    defective: bool = False


def _fix_signs(U: np.ndarray, V: np.ndarray):
    """Make each left singular vector's largest-magnitude entry real-positive."""
    idx = np.argmax(np.abs(U), axis=0)
    pivots = U[idx, np.arange(U.shape[1])]
    magnitudes = np.abs(pivots)
    phases = np.where(magnitudes > 0, pivots / np.where(magnitudes > 0, magnitudes, 1), 1)
    correction = np.conj(phases)
    if not np.iscomplexobj(U):
        correction = correction.real
    return U * correction, V * correction


def thin_svd(M: np.ndarray) -> TruncatedSvd:
    """
    Thin SVD of M carrying every singular triplet.

    Args:
        M: Real or complex matrix with finite entries

    Returns:
        TruncatedSvd with k = min(rows, cols) and the full spectrum
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.size == 0:
        raise ValueError(f"SVD input must be a non-empty 2-D matrix, got shape {M.shape}")
    _check_finite(M, "SVD input")

    try:
        U, S, Vh = linalg.svd(M, full_matrices=False, lapack_driver="gesdd", check_finite=False)
    except linalg.LinAlgError:
        logger.warning("gesdd did not converge, retrying with gesvd")
        try:
            U, S, Vh = linalg.svd(M, full_matrices=False, lapack_driver="gesvd", check_finite=False)
        except linalg.LinAlgError as e:
            raise NumericalError(f"SVD failed to converge: {e}") from e

    U, V = _fix_signs(U, Vh.conj().T)
    return TruncatedSvd(U, S, V, spectrum=S)


def svd_truncated(M: np.ndarray, k: int) -> TruncatedSvd:
    """Top-k singular triplets of M (best rank-k Frobenius approximation)."""
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError(f"SVD input must be 2-D, got shape {M.shape}")
    if not 1 <= k <= min(M.shape):
        raise ValueError(f"k={k} out of range for a {M.shape[0]}x{M.shape[1]} matrix")
    return thin_svd(M).truncate(k)


def eig_dense(A: np.ndarray) -> EigenDecomposition:
    """
    All eigenpairs of a small dense square matrix.

    Residuals above 1e-8 * ||A||_F flag the result as defective instead of failing.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"eig_dense needs a non-empty square matrix, got shape {A.shape}")
    _check_finite(A, "Eigen input")

    try:
        lambdas, W = linalg.eig(A, check_finite=False)
    except linalg.LinAlgError as e:
        raise NumericalError(f"Eigendecomposition failed to converge: {e}") from e

    W = W / np.linalg.norm(W, axis=0)
    scale = max(np.linalg.norm(A), np.finfo(float).tiny)
    residuals = np.linalg.norm(A @ W - W * lambdas, axis=0) / scale
    max_residual = float(residuals.max())
    defective = max_residual > EIG_RESIDUAL_TOL
    if defective:
        logger.warning(f"Eigenpair residual {max_residual:.2e} exceeds tolerance; matrix may be defective")
    return EigenDecomposition(W=W, lambdas=lambdas, max_residual=max_residual, defective=defective)


def lstsq(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution of A x = b (pseudoinverse solution)."""
    A = np.asarray(A)
    b = np.asarray(b)
    if A.ndim != 2:
        raise ValueError(f"lstsq matrix must be 2-D, got shape {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"Shape mismatch: A has {A.shape[0]} rows, b has {b.shape[0]}")
    _check_finite(A, "lstsq matrix")
    _check_finite(b, "lstsq right-hand side")

    try:
        # Singular values below eps * max(rows, cols) * sigma_1 are treated as zero.
        cond = np.finfo(float).eps * max(A.shape)
        x, _, _, _ = linalg.lstsq(A, b, cond=cond, lapack_driver="gelsd", check_finite=False)
    except linalg.LinAlgError as e:
        raise NumericalError(f"Least squares failed to converge: {e}") from e
    return x


def hard_threshold_coefficient(beta: float) -> float:
    """omega(beta) of the unknown-noise optimal hard threshold, beta = aspect ratio <= 1."""
    return 0.56 * beta ** 3 - 0.95 * beta ** 2 + 1.82 * beta + 1.43


def optimal_rank(S: np.ndarray, rows: int, cols: int) -> int:
    """
    Optimal hard-threshold target rank for an unknown noise level.

    Keeps singular values above omega(beta) * median(S); never returns less than 1.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.size == 0:
        raise ValueError("optimal_rank needs a non-empty singular value vector")
    beta = min(rows, cols) / max(rows, cols)
    tau = hard_threshold_coefficient(beta) * np.median(S)
    k = int(np.count_nonzero(S > tau))
    if k == 0:
        logger.warning("Hard threshold kept no singular value; clamping rank to 1")
    return max(k, 1)
