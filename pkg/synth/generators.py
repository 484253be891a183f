"""
Synthetic videos with known ground truth.

Two generators:
- make_planted_dmd: a real matrix that is exactly Phi diag(b) V for chosen
  eigenvalues, so a decomposition can be checked against the plant.
- make_scene: a textured static background with moving rectangles (recorded in
  the truth mask) and optional oscillating patches (dynamic background, not
  foreground).
"""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from frames_io.models import FrameSequence, ForegroundMask
from sensing.operators import make_rng

logger = logging.getLogger(__name__)

CONJUGATE_TOL = 1e-12
BACKGROUND_RANGE = (60.0, 190.0)


@dataclass(frozen=True, eq=False)
class PlantedDmd:
    frames: FrameSequence
    modes: np.ndarray
    amplitudes: np.ndarray
    eigenvalues: np.ndarray

    @property
    def rank(self) -> int:
        return self.eigenvalues.shape[0]


def _conjugate_pairs(eigenvalues: np.ndarray) -> Tuple[List[int], List[Tuple[int, int]]]:
    """Split indices into real eigenvalues and (upper, lower) conjugate pairs."""
    real, pairs = [], []
    unmatched = []
    for i, lam in enumerate(eigenvalues):
        if abs(lam.imag) <= CONJUGATE_TOL:
            real.append(i)
        elif lam.imag > 0:
            unmatched.append(i)
    lower = [i for i, lam in enumerate(eigenvalues) if lam.imag < -CONJUGATE_TOL]
    for i in unmatched:
        match = next((j for j in lower if abs(eigenvalues[j] - np.conj(eigenvalues[i])) <= CONJUGATE_TOL), None)
        if match is None:
            raise ValueError(f"Eigenvalue {eigenvalues[i]} has no conjugate partner")
        lower.remove(match)
        pairs.append((i, match))
    if lower:
        raise ValueError(f"Eigenvalue {eigenvalues[lower[0]]} has no conjugate partner")
    return real, pairs


def make_planted_dmd(n: int, m: int, eigenvalues: Iterable[complex], seed: int = 0,
                     noise_sigma: float = 0.0) -> PlantedDmd:
    """
    Build X = real(Phi diag(b) V) for the given eigenvalues.

    Modes come from an orthonormalized random real basis: a real eigenvalue gets a
    real column q, a conjugate pair gets (q_a + i q_b)/sqrt(2) and its conjugate
    with conjugate amplitudes, so the product is real up to rounding.

    Args:
        n: Rows (pixels); frames are n x 1 images
        m: Number of frames
        eigenvalues: Discrete-time eigenvalues, closed under conjugation
        seed: RNG seed
        noise_sigma: Optional i.i.d. Gaussian noise added to X

    Returns:
        PlantedDmd with the frames and the planted modes and amplitudes
    """
    lambdas = np.asarray(list(eigenvalues), dtype=np.complex128)
    r = lambdas.shape[0]
    if r == 0:
        raise ValueError("At least one eigenvalue is required")
    if r > min(n, m):
        raise ValueError(f"{r} eigenvalues exceed min(n, m) = {min(n, m)}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be nonnegative, got {noise_sigma}")
    if len(set(np.round(lambdas, 12).tolist())) != r:
        raise ValueError("Eigenvalues must be distinct")
    real, pairs = _conjugate_pairs(lambdas)

    rng = make_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((n, r)))
    modes = np.zeros((n, r), dtype=np.complex128)
    amplitudes = np.zeros(r, dtype=np.complex128)
    column = 0
    for i in real:
        modes[:, i] = basis[:, column]
        amplitudes[i] = rng.uniform(1.0, 2.0) * np.sqrt(n)
        column += 1
    for i, j in pairs:
        mode = (basis[:, column] + 1j * basis[:, column + 1]) / np.sqrt(2.0)
        modes[:, i], modes[:, j] = mode, np.conj(mode)
        b = rng.uniform(0.5, 1.0) * np.sqrt(n) * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
        amplitudes[i], amplitudes[j] = b, np.conj(b)
        column += 2

    dynamics = np.vander(lambdas, m, increasing=True)
    pixels = np.real(modes @ (amplitudes[:, None] * dynamics))
    if noise_sigma > 0:
        pixels = pixels + rng.normal(0.0, noise_sigma, size=pixels.shape)
    frames = FrameSequence(pixels, width=n, height=1)
    return PlantedDmd(frames=frames, modes=modes, amplitudes=amplitudes, eigenvalues=lambdas)


def _shape(size: Union[int, Tuple[int, int]]) -> Tuple[int, int]:
    if isinstance(size, (int, np.integer)):
        return int(size), int(size)
    width, height = size
    return int(width), int(height)


@dataclass(frozen=True)
class MovingObject:
    """
    Constant-intensity rectangle moving at constant velocity.

    position is the top-left (x, y) at start_frame; the object is present in
    frames [start_frame, end_frame).
    """

    size: Union[int, Tuple[int, int]]
    position: Tuple[float, float]
    velocity: Tuple[float, float] = (0.0, 0.0)
    intensity: float = 255.0
    start_frame: int = 0
    end_frame: Optional[int] = None

    def frames_present(self, m: int) -> range:
        end = m if self.end_frame is None else min(self.end_frame, m)
        return range(max(self.start_frame, 0), end)

    def corner(self, t: int) -> Tuple[int, int]:
        """Integer top-left corner at frame t (half-up rounding)."""
        dt = t - self.start_frame
        x = int(np.floor(self.position[0] + self.velocity[0] * dt + 0.5))
        y = int(np.floor(self.position[1] + self.velocity[1] * dt + 0.5))
        return x, y


@dataclass(frozen=True)
class OscillatingPatch:
    """Static rectangle whose intensity offset is amplitude * sin(2 pi t / period + phase)."""

    size: Union[int, Tuple[int, int]]
    position: Tuple[int, int]
    amplitude: float = 20.0
    period: float = 20.0
    phase: float = 0.0

    def offset(self, t: int) -> float:
        return self.amplitude * np.sin(2.0 * np.pi * t / self.period + self.phase)


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    frames: FrameSequence
    truth: ForegroundMask
    background: np.ndarray
    objects: Tuple[MovingObject, ...]
    oscillators: Tuple[OscillatingPatch, ...]
    noise_sigma: float


def smooth_background(width: int, height: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded smooth random field rescaled to BACKGROUND_RANGE, row-major (height x width)."""
    field = rng.standard_normal((height, width))
    field = ndimage.gaussian_filter(field, sigma=max(width, height) / 8.0, mode="wrap")
    low, high = BACKGROUND_RANGE
    spread = field.max() - field.min()
    if spread <= 0:
        return np.full((height, width), (low + high) / 2.0)
    return low + (field - field.min()) * (high - low) / spread


def _check_bounds(rect: Tuple[int, int], corner: Tuple[int, int], width: int, height: int, label: str, t: int):
    w, h = rect
    x, y = corner
    if x < 0 or y < 0 or x + w > width or y + h > height:
        raise ValueError(f"{label} leaves the {width}x{height} frame at frame {t} (corner {corner}, size {rect})")


def make_scene(width: int, height: int, m: int, objects: Sequence[MovingObject] = (),
               noise_sigma: float = 0.0, seed: int = 0,
               oscillators: Sequence[OscillatingPatch] = ()) -> SyntheticScene:
    """
    Render a synthetic video and its exact foreground truth.

    Args:
        width: Frame width
        height: Frame height
        m: Number of frames
        objects: Moving rectangles (foreground)
        noise_sigma: Standard deviation of i.i.d. pixel noise
        seed: RNG seed (background texture and noise)
        oscillators: Periodic background patches, excluded from the truth

    Returns:
        SyntheticScene with frames clamped to [0, 255]
    """
    if width < 1 or height < 1 or m < 2:
        raise ValueError(f"Scene needs positive dimensions and m >= 2, got {width}x{height}, m={m}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be nonnegative, got {noise_sigma}")

    rng = make_rng(seed)
    background = smooth_background(width, height, rng)
    video = np.repeat(background[None, :, :], m, axis=0)
    truth = np.zeros((m, height, width), dtype=bool)

    for k, patch in enumerate(oscillators):
        w, h = _shape(patch.size)
        x, y = patch.position
        _check_bounds((w, h), (x, y), width, height, f"Oscillating patch {k}", 0)
        offsets = np.array([patch.offset(t) for t in range(m)])
        video[:, y:y + h, x:x + w] += offsets[:, None, None]

    for k, obj in enumerate(objects):
        w, h = _shape(obj.size)
        for t in obj.frames_present(m):
            x, y = obj.corner(t)
            _check_bounds((w, h), (x, y), width, height, f"Object {k}", t)
            video[t, y:y + h, x:x + w] = obj.intensity
            truth[t, y:y + h, x:x + w] = True

    if noise_sigma > 0:
        video = video + rng.normal(0.0, noise_sigma, size=video.shape)
    video = np.clip(video, 0.0, 255.0)

    logger.debug(f"Rendered {width}x{height} scene, m={m}, {len(objects)} object(s), {len(oscillators)} patch(es)")
    return SyntheticScene(
        frames=FrameSequence(video.reshape(m, -1).T, width, height),
        truth=ForegroundMask(truth.reshape(m, -1).T, 0.0, width, height),
        background=background.ravel(),
        objects=tuple(objects),
        oscillators=tuple(oscillators),
        noise_sigma=noise_sigma,
    )


def crossing_block_scene(width: int = 64, height: int = 64, m: int = 200, size: int = 8,
                         start_frame: int = 50, end_frame: int = 150, noise_sigma: float = 0.0,
                         seed: int = 0) -> SyntheticScene:
    """One block crossing the frame horizontally between start_frame and end_frame."""
    span = max(end_frame - start_frame - 1, 1)
    block = MovingObject(
        size=size,
        position=(0.0, (height - size) / 2.0),
        velocity=((width - size) / span, 0.0),
        intensity=255.0,
        start_frame=start_frame,
        end_frame=end_frame,
    )
    return make_scene(width, height, m, [block], noise_sigma, seed)


def random_scene(width: int, height: int, m: int, n_objects: int = 1, size: int = 8,
                 noise_sigma: float = 0.0, seed: int = 0, n_oscillators: int = 0) -> SyntheticScene:
    """
    Scene with seeded random straight-line objects and oscillating patches.

    Each object enters at a random frame, stays for a random span and travels
    between two in-bounds corners, so the path never leaves the frame.
    """
    if size < 1 or size > min(width, height):
        raise ValueError(f"Object size {size} does not fit a {width}x{height} frame")
    rng = make_rng(seed + 1)
    objects = []
    for _ in range(n_objects):
        start = int(rng.integers(0, max(m // 2, 1)))
        end = int(rng.integers(start + 2, m + 1)) if start + 2 <= m else m
        x0, x1 = rng.integers(0, width - size + 1, size=2)
        y0, y1 = rng.integers(0, height - size + 1, size=2)
        span = max(end - start - 1, 1)
        objects.append(MovingObject(
            size=size,
            position=(float(x0), float(y0)),
            velocity=((x1 - x0) / span, (y1 - y0) / span),
            intensity=float(rng.choice([20.0, 235.0])),
            start_frame=start,
            end_frame=end,
        ))
    oscillators = []
    for _ in range(n_oscillators):
        x = int(rng.integers(0, width - size + 1))
        y = int(rng.integers(0, height - size + 1))
        oscillators.append(OscillatingPatch(size=size, position=(x, y), amplitude=15.0,
                                            period=float(rng.uniform(10.0, 40.0))))
    return make_scene(width, height, m, objects, noise_sigma, seed, oscillators)
