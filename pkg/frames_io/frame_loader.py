"""
Frame loader for PGM directories and raw_matrix files.
Turns frame files into FrameSequence matrices and cuts them into snapshots and batches.
"""
import logging
from pathlib import Path
from typing import List, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .models import FrameSequence, ForegroundMask, SnapshotPair

logger = logging.getLogger(__name__)

RAW_MAGIC = b"CDMD"
RAW_VERSION = 1
RAW_HEADER = np.dtype([
    ("magic", "S4"),
    ("version", "<u4"),
    ("width", "<u4"),
    ("height", "<u4"),
    ("m", "<u4"),
    ("frame_interval", "<f8"),
])

FRAME_FORMATS = ("pgm_dir", "raw_matrix")


PGM_MAXVAL = 255


def _pgm_header(head: bytes) -> List[bytes]:
    """Header tokens (magic, width, height, maxval) with '#' comments removed."""
    tokens: List[bytes] = []
    for line in head.split(b"\n"):
        tokens.extend(line.split(b"#", 1)[0].split())
        if len(tokens) >= 4:
            break
    return tokens[:4]


def _read_pgm(path: Path) -> np.ndarray:
    """Read one binary 8-bit PGM (P5) as a height x width uint8 array."""
    with open(path, "rb") as f:
        head = f.read(512)
    if head[:2] != b"P5":
        raise ValueError(f"Not a binary grayscale PGM (P5): {path}")
    tokens = _pgm_header(head)
    if len(tokens) < 4 or not tokens[3].isdigit():
        raise ValueError(f"Truncated or unreadable PGM header: {path}")
    maxval = int(tokens[3])
    if maxval != PGM_MAXVAL:
        raise ValueError(f"PGM maxval must be {PGM_MAXVAL}, got {maxval}: {path}")
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                raise ValueError(f"PGM must be 8-bit grayscale (maxval 255), got mode {img.mode}: {path}")
            img.load()
            return np.asarray(img, dtype=np.uint8)
    except (OSError, UnidentifiedImageError) as e:
        raise ValueError(f"Truncated or unreadable PGM {path}: {e}") from e


def _list_pgm_files(directory: Path) -> List[Path]:
    if not directory.is_dir():
        raise ValueError(f"pgm_dir input must be a directory: {directory}")
    # Lexicographic filename order defines time.
    return sorted((p for p in directory.iterdir() if p.suffix.lower() == ".pgm"), key=lambda p: p.name)


def read_raw_matrix(path: Union[str, Path]):
    """
    Read a raw_matrix file.

    Returns:
        (matrix n x m, width, height, frame_interval)
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < RAW_HEADER.itemsize:
        raise ValueError(f"Truncated raw_matrix header: {path}")
    header = np.frombuffer(data, dtype=RAW_HEADER, count=1)[0]
    if header["magic"] != RAW_MAGIC:
        raise ValueError(f"Bad raw_matrix magic {header['magic']!r}: {path}")
    if int(header["version"]) != RAW_VERSION:
        raise ValueError(f"Unsupported raw_matrix version {int(header['version'])}: {path}")

    width, height, m = int(header["width"]), int(header["height"]), int(header["m"])
    n = width * height
    expected = RAW_HEADER.itemsize + 8 * n * m
    if len(data) < expected:
        raise ValueError(f"Truncated raw_matrix payload: expected {expected} bytes, got {len(data)}: {path}")

    payload = np.frombuffer(data, dtype="<f8", count=n * m, offset=RAW_HEADER.itemsize)
    # Column-major: frame-contiguous.
    matrix = payload.reshape((n, m), order="F").astype(np.float64)
    return matrix, width, height, float(header["frame_interval"])


def load_frames(path: Union[str, Path], format: str = "pgm_dir", frame_interval: float = 1.0) -> FrameSequence:
    """
    Load a grayscale frame sequence.

    Args:
        path: Directory of PGM files (pgm_dir) or a raw_matrix file
        format: One of FRAME_FORMATS
        frame_interval: Seconds between frames for pgm_dir input (raw_matrix stores its own)

    Returns:
        FrameSequence with one flattened (row-major) frame per column
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Input not found: {path}")
    if format not in FRAME_FORMATS:
        raise ValueError(f"Unknown frame format '{format}', expected one of {FRAME_FORMATS}")

    if format == "raw_matrix":
        matrix, width, height, interval = read_raw_matrix(path)
        frames = FrameSequence(matrix, width, height, interval)
        if not frames.in_intensity_range():
            raise ValueError(
                f"raw_matrix intensities must lie in [0, 255], found [{frames.pixels.min():g}, "
                f"{frames.pixels.max():g}]: {path}"
            )
        logger.info(f"Loaded raw_matrix {path}: {width}x{height}, {frames.n_frames} frames")
        return frames

    files = _list_pgm_files(path)
    if len(files) < 2:
        raise ValueError(f"Need at least 2 PGM frames in {path}, found {len(files)}")

    first = _read_pgm(files[0])
    height, width = first.shape
    pixels = np.empty((width * height, len(files)), dtype=np.float64)
    pixels[:, 0] = first.reshape(-1)
    for t, frame_file in enumerate(files[1:], start=1):
        image = _read_pgm(frame_file)
        if image.shape != first.shape:
            raise ValueError(
                f"Inconsistent frame dimensions: {frame_file.name} is {image.shape[1]}x{image.shape[0]}, "
                f"expected {width}x{height}"
            )
        pixels[:, t] = image.reshape(-1)

    logger.info(f"Loaded {len(files)} PGM frames from {path} ({width}x{height})")
    return FrameSequence(pixels, width, height, frame_interval)


def load_mask(path: Union[str, Path], tau: float = 0.0) -> ForegroundMask:
    """
    Load a directory of mask PGMs (any nonzero pixel is foreground).

    Args:
        path: Directory of mask PGMs, ordered lexicographically
        tau: Threshold recorded on the mask (0 for ground truth)

    Returns:
        ForegroundMask with one column per file
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Mask directory not found: {path}")
    files = _list_pgm_files(path)
    if not files:
        raise ValueError(f"No PGM masks found in {path}")

    images = [_read_pgm(f) for f in files]
    height, width = images[0].shape
    for f, image in zip(files, images):
        if image.shape != (height, width):
            raise ValueError(f"Inconsistent mask dimensions in {f.name}")
    bits = np.stack([image.reshape(-1) != 0 for image in images], axis=1)
    return ForegroundMask(bits, tau, width, height)


def split_snapshots(frames: FrameSequence) -> SnapshotPair:
    """Split frames into overlapping left (1..m-1) and right (2..m) snapshot matrices."""
    if frames.n_frames < 2:
        raise ValueError(f"Need at least 2 frames to form snapshots, got {frames.n_frames}")
    pixels = frames.pixels
    return SnapshotPair(left=pixels[:, :-1], right=pixels[:, 1:], compressed=False, source=pixels)


def batch(frames: FrameSequence, batch_size: int) -> List[FrameSequence]:
    """
    Cut frames into consecutive non-overlapping batches.

    A trailing remainder of a single frame is merged into the previous batch.
    """
    if batch_size < 2:
        raise ValueError(f"batch_size must be at least 2, got {batch_size}")

    m = frames.n_frames
    bounds = list(range(0, m, batch_size)) + [m]
    if len(bounds) > 2 and bounds[-1] - bounds[-2] < 2:
        del bounds[-2]
    return [frames.columns(start, stop) for start, stop in zip(bounds[:-1], bounds[1:])]
