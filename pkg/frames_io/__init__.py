"""Frame ingestion, snapshot splitting, batching and artifact writing."""

from .models import FrameSequence, SnapshotPair, ForegroundMask
from .frame_loader import load_frames, load_mask, read_raw_matrix, split_snapshots, batch
from .frame_writer import save_frames, save_frame, save_mask, save_frame_sequence, write_raw_matrix

__all__ = [
    'FrameSequence', 'SnapshotPair', 'ForegroundMask',
    'load_frames', 'load_mask', 'read_raw_matrix', 'split_snapshots', 'batch',
    'save_frames', 'save_frame', 'save_mask', 'save_frame_sequence', 'write_raw_matrix',
]
