"""
Writers for raw_matrix files, mask PGMs and background frames.
"""
import logging
from pathlib import Path
from typing import List, Union

import numpy as np
from PIL import Image

from .frame_loader import RAW_HEADER, RAW_MAGIC, RAW_VERSION
from .models import FrameSequence, ForegroundMask

logger = logging.getLogger(__name__)


def write_raw_matrix(path: Union[str, Path], matrix: np.ndarray, width: int, height: int,
                     frame_interval: float = 1.0) -> Path:
    """Write a real n x m matrix in raw_matrix layout (little-endian, column-major)."""
    matrix = np.asarray(matrix)
    if np.iscomplexobj(matrix):
        raise ValueError("raw_matrix stores real values only; write real and imaginary parts separately")
    if matrix.ndim != 2 or matrix.shape[0] != width * height:
        raise ValueError(f"Matrix shape {matrix.shape} does not match {width}x{height} frames")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.zeros(1, dtype=RAW_HEADER)
    header["magic"] = RAW_MAGIC
    header["version"] = RAW_VERSION
    header["width"] = width
    header["height"] = height
    header["m"] = matrix.shape[1]
    header["frame_interval"] = frame_interval
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(np.asarray(matrix, dtype="<f8").tobytes(order="F"))
    return path


def save_frames(frames: FrameSequence, path: Union[str, Path]) -> Path:
    """Write a FrameSequence as a raw_matrix file (bit-exact round trip with load_frames)."""
    return write_raw_matrix(path, frames.pixels, frames.width, frames.height, frames.frame_interval)


def _write_pgm(path: Path, image: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    # Pillow writes mode "L" images as binary P5 with maxval 255.
    Image.fromarray(image).save(path, format="PPM")


def save_frame(frame: np.ndarray, width: int, height: int, path: Union[str, Path]) -> Path:
    """
    Write one frame vector as an 8-bit PGM.

    Values are clamped to [0, 255] and rounded half-to-even.
    """
    frame = np.asarray(frame)
    if frame.size != width * height:
        raise ValueError(f"Frame has {frame.size} pixels, expected {width}x{height} = {width * height}")
    pixels = np.rint(np.clip(np.real(frame), 0.0, 255.0)).astype(np.uint8)
    path = Path(path)
    _write_pgm(path, pixels.reshape(height, width))
    return path


def save_mask(mask: ForegroundMask, directory: Union[str, Path], start_index: int = 0,
              prefix: str = "mask") -> List[Path]:
    """
    Write each mask column as a PGM (foreground=255, background=0).

    Args:
        mask: ForegroundMask to write
        directory: Output directory
        start_index: Frame number of the first column (used in file names)
        prefix: File name prefix

    Returns:
        List of written paths, in frame order
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for t in range(mask.n_frames):
        image = np.where(mask.bits[:, t], 255, 0).astype(np.uint8).reshape(mask.height, mask.width)
        path = directory / f"{prefix}_{start_index + t:05d}.pgm"
        _write_pgm(path, image)
        written.append(path)
    logger.debug(f"Wrote {len(written)} mask frames to {directory}")
    return written


def save_frame_sequence(frames: FrameSequence, directory: Union[str, Path], prefix: str = "frame") -> List[Path]:
    """Write every frame of a sequence as PGM (pgm_dir layout)."""
    directory = Path(directory)
    return [
        save_frame(frames.frame(t), frames.width, frames.height, directory / f"{prefix}_{t:05d}.pgm")
        for t in range(frames.n_frames)
    ]
