"""
Exact and compressed dynamic mode decomposition.

Both variants project the shifted snapshots onto the leading singular vectors of
the (possibly sketched) left snapshots, eigendecompose the reduced operator and
lift the eigenvectors to full-state modes with the full right snapshots X'.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

import config
from frames_io.frame_writer import write_raw_matrix
from frames_io.models import SnapshotPair
from numkernel import eig_dense, lstsq, optimal_rank, rounded, stage_timer, thin_svd
from sensing import SensingOperator, apply

logger = logging.getLogger(__name__)

# Singular values below this fraction of sigma_1 are dropped instead of inverted.
SINGULAR_DROP_TOL = 1e-12
REALNESS_TOL = 1e-8
AMPLITUDE_MODES = ("full", "compressed")

RankSpec = Union[int, str, None]


@dataclass(frozen=True, eq=False)
class DmdModel:
    """Modes Phi, eigenvalues Lambda and amplitudes b of a fitted decomposition."""

    modes: np.ndarray
    lambdas: np.ndarray
    amplitudes: np.ndarray
    frame_interval: float
    n_frames: int
    modes_compressed: Optional[np.ndarray] = None
    # First compressed snapshot y_1 (compressed amplitude / selection path).
    initial_compressed: Optional[np.ndarray] = None
    method: str = "exact"
    sensing: Optional[Dict[str, Any]] = None
    real_data: bool = True
    spectrum: Optional[np.ndarray] = field(default=None, repr=False)
    timings: Dict[str, float] = field(default_factory=dict, compare=False)
    diagnostics: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        k = self.lambdas.shape[0]
        if self.amplitudes.shape[0] != k or self.modes.shape[1] != k:
            raise ValueError(
                f"Inconsistent model: {k} eigenvalues, {self.amplitudes.shape[0]} amplitudes, "
                f"{self.modes.shape[1]} modes"
            )

    @property
    def k(self) -> int:
        return self.lambdas.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.modes.shape[0]


@dataclass(frozen=True, eq=False)
class LowRankSparseSplit:
    """Partition of mode indices into background (|omega| ~ 0) and foreground."""

    background: Tuple[int, ...]
    foreground: Tuple[int, ...]
    omegas: np.ndarray = field(repr=False, compare=False, default=None)


def _resolve_rank(spectrum: np.ndarray, rows: int, cols: int, k: RankSpec,
                  diagnostics: Dict[str, Any]) -> int:
    sigma1 = spectrum[0]
    if not sigma1 > 0:
        raise ValueError("Degenerate input: snapshot matrix is all zero")

    if k is None or k == "auto":
        rank = optimal_rank(spectrum, rows, cols)
        diagnostics["rank_rule"] = "optimal_hard_threshold"
    else:
        rank = int(k)
        if not 1 <= rank <= spectrum.shape[0]:
            raise ValueError(f"Target rank k={rank} out of range [1, {spectrum.shape[0]}]")
        diagnostics["rank_rule"] = "fixed"

    keep = int(np.count_nonzero(spectrum[:rank] > SINGULAR_DROP_TOL * sigma1))
    if keep < rank:
        log = logger.info if diagnostics["rank_rule"] == "optimal_hard_threshold" else logger.warning
        log(f"Dropping {rank - keep} singular value(s) below {SINGULAR_DROP_TOL:g} * sigma_1; k={keep}")
    diagnostics["dropped_singular_values"] = rank - keep
    return keep


def _pair_order(lambdas: np.ndarray, amplitudes: np.ndarray) -> np.ndarray:
    """Indices sorted by descending |b| with conjugate eigenvalue pairs kept adjacent."""
    order = np.argsort(-np.abs(amplitudes), kind="stable")
    placed = np.zeros(lambdas.shape[0], dtype=bool)
    result = []
    for j in order:
        if placed[j]:
            continue
        placed[j] = True
        result.append(j)
        if lambdas[j].imag == 0:
            continue
        candidates = np.flatnonzero(~placed)
        if candidates.size == 0:
            continue
        distance = np.abs(lambdas[candidates] - np.conj(lambdas[j]))
        best = candidates[np.argmin(distance)]
        if distance.min() <= 1e-6 * max(1.0, abs(lambdas[j])):
            placed[best] = True
            result.append(best)
    return np.asarray(result, dtype=int)


def _decompose(Y: np.ndarray, Yp: np.ndarray, Xp: np.ndarray, k: RankSpec,
               timings: Dict[str, float], diagnostics: Dict[str, Any]):
    """Shared core: SVD of Y, reduced operator, eigenpairs and lifted modes."""
    with stage_timer(timings, "svd"):
        svd = thin_svd(Y)
        rank = _resolve_rank(svd.spectrum, Y.shape[0], Y.shape[1], k, diagnostics)
        svd = svd.truncate(rank)

    with stage_timer(timings, "eig"):
        VS_inv = svd.V / svd.S[None, :]
        A_tilde = svd.U.conj().T @ (Yp @ VS_inv)
        eig = eig_dense(A_tilde)
    diagnostics["eig_max_residual"] = eig.max_residual
    diagnostics["eig_defective"] = eig.defective

    with stage_timer(timings, "modes"):
        lift = VS_inv @ eig.W
        modes = Xp @ lift
    return svd, eig, lift, modes


def _finish(modes, lambdas, amplitudes, modes_compressed=None, **kwargs) -> DmdModel:
    order = _pair_order(lambdas, amplitudes)
    return DmdModel(
        modes=modes[:, order],
        lambdas=lambdas[order],
        amplitudes=amplitudes[order],
        modes_compressed=None if modes_compressed is None else modes_compressed[:, order],
        **kwargs,
    )


def dmd_exact(snapshots: SnapshotPair, k: RankSpec = "auto", frame_interval: float = 1.0) -> DmdModel:
    """
    Exact DMD of an uncompressed snapshot pair.

    Args:
        snapshots: Left/right snapshots X, X'
        k: Target rank or "auto" for the optimal hard threshold
        frame_interval: Seconds between frames (Delta t)

    Returns:
        DmdModel ordered by descending |b|
    """
    if snapshots.compressed:
        raise ValueError("dmd_exact needs uncompressed snapshots")
    X, Xp = snapshots.left, snapshots.right
    if not np.any(X):
        raise ValueError("Degenerate input: snapshot matrix is all zero")

    timings: Dict[str, float] = {}
    diagnostics: Dict[str, Any] = {"conjugate_pairs": "enforced"}
    svd, eig, _, modes = _decompose(X, Xp, Xp, k, timings, diagnostics)

    with stage_timer(timings, "amplitudes"):
        amplitudes = lstsq(modes, X[:, 0])

    model = _finish(
        modes, eig.lambdas, amplitudes,
        frame_interval=frame_interval,
        n_frames=snapshots.n_snapshots + 1,
        method="exact",
        real_data=not np.iscomplexobj(X),
        spectrum=svd.spectrum,
        timings=timings,
        diagnostics=diagnostics,
    )
    logger.debug(f"Exact DMD: k={model.k}, timings={rounded(timings)}")
    return model


def dmd_compressed(snapshots: SnapshotPair, C: SensingOperator, k: RankSpec = "auto",
                   amplitude_mode: str = "full", frame_interval: float = 1.0) -> DmdModel:
    """
    Compressed DMD: decompose Y = C X, Y' = C X' and recover full modes from X'.

    Args:
        snapshots: Uncompressed left/right snapshots
        C: Sensing operator with C.n equal to the snapshot row count
        k: Target rank or "auto"
        amplitude_mode: "full" solves Phi b = x_1, "compressed" solves Phi_Y b = y_1
        frame_interval: Seconds between frames

    Returns:
        DmdModel carrying both full and compressed modes
    """
    if snapshots.compressed:
        raise ValueError("dmd_compressed needs uncompressed snapshots to recover full modes")
    if C.n != snapshots.n_rows:
        raise ValueError(f"Sensing dimension mismatch: operator n={C.n}, snapshots have {snapshots.n_rows} rows")
    if k not in (None, "auto") and int(k) > C.p:
        raise ValueError(f"Number of measurements p={C.p} is smaller than target rank k={k}")
    if amplitude_mode not in AMPLITUDE_MODES:
        raise ValueError(f"amplitude_mode must be one of {AMPLITUDE_MODES}, got '{amplitude_mode}'")

    X, Xp = snapshots.left, snapshots.right
    timings: Dict[str, float] = {}
    with stage_timer(timings, "compress"):
        if snapshots.source is not None:
            sketch = apply(C, snapshots.source)
            Y, Yp = sketch[:, :-1], sketch[:, 1:]
        else:
            Y, Yp = apply(C, X), apply(C, Xp)

    complex_sketch = np.iscomplexobj(Y)
    diagnostics: Dict[str, Any] = {"conjugate_pairs": "waived" if complex_sketch else "enforced"}
    svd, eig, lift, modes = _decompose(Y, Yp, Xp, k, timings, diagnostics)

    with stage_timer(timings, "modes"):
        modes_compressed = Yp @ lift

    with stage_timer(timings, "amplitudes"):
        if amplitude_mode == "full":
            amplitudes = lstsq(modes, X[:, 0])
        else:
            amplitudes = lstsq(modes_compressed, Y[:, 0])
    diagnostics["amplitude_mode"] = amplitude_mode

    model = _finish(
        modes, eig.lambdas, amplitudes, modes_compressed=modes_compressed,
        initial_compressed=np.array(Y[:, 0]),
        frame_interval=frame_interval,
        n_frames=snapshots.n_snapshots + 1,
        method="compressed",
        sensing=C.parameters(),
        real_data=not np.iscomplexobj(X),
        spectrum=svd.spectrum,
        timings=timings,
        diagnostics=diagnostics,
    )
    logger.debug(f"Compressed DMD ({C.kind.value}, p={C.p}): k={model.k}, timings={rounded(timings)}")
    return model


def vandermonde(model: DmdModel, m: int) -> np.ndarray:
    """k x m Vandermonde matrix with entry (j, t) = lambda_j^t, t = 0..m-1."""
    if m < 1:
        raise ValueError(f"Vandermonde needs m >= 1, got {m}")
    return np.vander(model.lambdas, m, increasing=True)


def continuous_eigs(model: DmdModel) -> np.ndarray:
    """omega_j = Log(lambda_j) / Delta t on the principal branch; lambda = 0 maps to -inf."""
    with np.errstate(divide="ignore"):
        return np.log(model.lambdas.astype(np.complex128)) / model.frame_interval


def _time_indices(model: DmdModel, t_range: Optional[Iterable[int]]) -> np.ndarray:
    if t_range is None:
        return np.arange(model.n_frames)
    return np.asarray(list(t_range), dtype=int)


def _dynamics(model: DmdModel, t: np.ndarray) -> np.ndarray:
    return model.amplitudes[:, None] * model.lambdas[:, None] ** t[None, :]


def _real_part(model: DmdModel, X: np.ndarray) -> np.ndarray:
    if model.real_data and model.diagnostics.get("conjugate_pairs") != "waived" and X.size:
        scale = max(float(np.abs(X.real).max()), np.finfo(float).tiny)
        ratio = float(np.abs(X.imag).max()) / scale
        if ratio > REALNESS_TOL:
            logger.warning(f"Reconstruction imaginary part {ratio:.2e} * max|X| exceeds {REALNESS_TOL:g}")
            previous = model.diagnostics.get("realness_violation", 0.0)
            model.diagnostics["realness_violation"] = max(previous, ratio)
    return np.ascontiguousarray(X.real)


def _zero_frequency_modes(model: DmdModel, omega_tol: float) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Indices with |omega| <= omega_tol, or the smallest |omega| mode(s) when there are none."""
    omegas = continuous_eigs(model)
    magnitude = np.abs(omegas)
    background = np.flatnonzero(magnitude <= omega_tol)
    fallback = background.size == 0
    if fallback:
        # Conjugate partners share |omega|, so they fall back together.
        smallest = magnitude.min()
        background = np.flatnonzero(magnitude <= smallest + 1e-9 * max(smallest, 1.0))
    return background, omegas, fallback


def _partition_sum(model: DmdModel, t: np.ndarray, background: Sequence[int],
                   foreground: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    dynamics = _dynamics(model, t)
    background, foreground = list(background), list(foreground)
    low_rank = _real_part(model, model.modes[:, background] @ dynamics[background])
    if foreground:
        sparse = _real_part(model, model.modes[:, foreground] @ dynamics[foreground])
    else:
        sparse = np.zeros_like(low_rank)
    return low_rank, sparse


def reconstruct(model: DmdModel, t_range: Optional[Iterable[int]] = None,
                omega_tol: float = config.DEFAULT_OMEGA_TOL) -> np.ndarray:
    """
    Real part of Phi diag(b) V restricted to frame indices t_range (0-based).

    Index t corresponds to lambda^t, so t = 0 gives Phi b. The sum is accumulated as
    the zero-frequency part plus the remaining modes, so it equals the L + S total of
    reconstruct_split at the same omega_tol.
    """
    t = _time_indices(model, t_range)
    background, _, _ = _zero_frequency_modes(model, omega_tol)
    foreground = np.setdiff1d(np.arange(model.k), background)
    low_rank, sparse = _partition_sum(model, t, background, foreground)
    return low_rank + sparse


def split_low_rank_sparse(model: DmdModel, omega_tol: float = config.DEFAULT_OMEGA_TOL) -> LowRankSparseSplit:
    """
    Partition modes into background P = {j : |omega_j| <= omega_tol} and foreground.

    An empty background set falls back to the mode (or conjugate pair) with smallest |omega|.
    """
    if omega_tol < 0:
        raise ValueError(f"omega_tol must be nonnegative, got {omega_tol}")
    background, omegas, fallback = _zero_frequency_modes(model, omega_tol)
    if fallback:
        logger.warning(
            f"No mode with |omega| <= {omega_tol:g}; using mode(s) {background.tolist()} "
            f"(|omega|={np.abs(omegas[background[0]]):.3g})"
        )
    foreground = np.setdiff1d(np.arange(model.k), background)
    return LowRankSparseSplit(tuple(int(j) for j in background), tuple(int(j) for j in foreground), omegas)


def reconstruct_split(model: DmdModel, split: LowRankSparseSplit,
                      t_range: Optional[Iterable[int]] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Background (L) and foreground (S) reconstructions and their sum X_DMD = L + S.
    """
    t = _time_indices(model, t_range)
    low_rank, sparse = _partition_sum(model, t, split.background, split.foreground)
    return low_rank, sparse, low_rank + sparse


def mode_dynamics(model: DmdModel, m: Optional[int] = None) -> np.ndarray:
    """|B V|: magnitude of each mode's amplitude over time (k x m)."""
    m = model.n_frames if m is None else m
    return np.abs(model.amplitudes[:, None] * vandermonde(model, m))


def _complex_pairs(values: Sequence[complex]):
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


def model_report(model: DmdModel, include_dynamics: bool = False) -> Dict[str, Any]:
    """JSON-ready summary of a decomposition."""
    omegas = continuous_eigs(model)
    report = {
        "method": model.method,
        "k": model.k,
        "n_frames": model.n_frames,
        "frame_interval": model.frame_interval,
        "lambdas": _complex_pairs(model.lambdas),
        "omegas": [[float(w.real) if np.isfinite(w.real) else None, float(w.imag)] for w in omegas],
        "amplitude_magnitudes": [float(v) for v in np.abs(model.amplitudes)],
        "sensing": model.sensing,
        "timings_ms": rounded(model.timings),
        "diagnostics": {key: (bool(v) if isinstance(v, np.bool_) else v) for key, v in model.diagnostics.items()},
    }
    if include_dynamics:
        report["mode_dynamics"] = mode_dynamics(model).tolist()
    return report


def save_modes(model: DmdModel, directory: Union[str, Path], width: int, height: int):
    """Dump real and imaginary parts of Phi as raw_matrix files (one mode per column)."""
    directory = Path(directory)
    real_path = write_raw_matrix(directory / "modes_real.raw", model.modes.real, width, height, model.frame_interval)
    imag_path = write_raw_matrix(directory / "modes_imag.raw", model.modes.imag, width, height, model.frame_interval)
    return real_path, imag_path
