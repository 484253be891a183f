"""
In-memory data model for grayscale frame sequences and per-pixel masks.

Frames are flattened row-major: pixel (r, c) of a width x height frame lives at
index r * width + c of its column.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np


def _readonly(array: np.ndarray) -> np.ndarray:
    view = array.view()
    view.setflags(write=False)
    return view


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Immutable n x m matrix of frames (one flattened frame per column)."""

    pixels: np.ndarray
    width: int
    height: int
    frame_interval: float = 1.0

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.flags.writeable:
            pixels = pixels.copy()
        if pixels.ndim != 2:
            raise ValueError(f"Frame matrix must be 2-D, got shape {pixels.shape}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"Frame dimensions must be positive, got {self.width}x{self.height}")
        if pixels.shape[0] != self.width * self.height:
            raise ValueError(
                f"Frame matrix has {pixels.shape[0]} rows, expected width*height = {self.width * self.height}"
            )
        if pixels.shape[1] < 2:
            raise ValueError(f"A frame sequence needs at least 2 frames, got {pixels.shape[1]}")
        if not np.isfinite(pixels).all():
            raise ValueError("Frame matrix contains non-finite values")
        if not self.frame_interval > 0:
            raise ValueError(f"frame_interval must be positive, got {self.frame_interval}")
        object.__setattr__(self, "pixels", _readonly(pixels))

    @property
    def n_pixels(self) -> int:
        return self.pixels.shape[0]

    @property
    def n_frames(self) -> int:
        return self.pixels.shape[1]

    def frame(self, t: int) -> np.ndarray:
        """Return frame t (0-based) as a flat vector."""
        return self.pixels[:, t]

    def in_intensity_range(self) -> bool:
        """True when every intensity lies in [0, 255]."""
        return bool(self.pixels.min() >= 0.0 and self.pixels.max() <= 255.0)

    def columns(self, start: int, stop: int) -> "FrameSequence":
        """Sub-sequence of frames [start, stop)."""
        return FrameSequence(self.pixels[:, start:stop], self.width, self.height, self.frame_interval)


@dataclass(frozen=True, eq=False)
class SnapshotPair:
    """Left/right time-shifted snapshot matrices X, X' (or Y, Y' when compressed)."""

    left: np.ndarray
    right: np.ndarray
    compressed: bool = False
    # Full frame matrix the overlapping pair was cut from, when known.
    source: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.left.shape != self.right.shape:
            raise ValueError(
                f"Left and right snapshots differ in shape: {self.left.shape} vs {self.right.shape}"
            )

    @property
    def n_rows(self) -> int:
        return self.left.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.left.shape[1]


@dataclass(frozen=True, eq=False)
class ForegroundMask:
    """Binary n x m foreground mask (one column per frame) produced at threshold tau."""

    bits: np.ndarray
    tau: float
    width: int
    height: int

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim == 1:
            bits = bits[:, None]
        if bits.shape[0] != self.width * self.height:
            raise ValueError(
                f"Mask has {bits.shape[0]} rows, expected width*height = {self.width * self.height}"
            )
        object.__setattr__(self, "bits", _readonly(bits))

    @property
    def n_frames(self) -> int:
        return self.bits.shape[1]

    def columns(self, start: int, stop: int) -> "ForegroundMask":
        return ForegroundMask(self.bits[:, start:stop], self.tau, self.width, self.height)

    def foreground_count(self) -> int:
        return int(self.bits.sum())
