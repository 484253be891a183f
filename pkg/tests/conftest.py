"""
Pytest configuration and shared fixtures.
"""
import pytest
import os
import sys

import numpy as np

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from frames_io import FrameSequence
from synth import MovingObject, make_planted_dmd, make_scene

PLANTED_EIGENVALUES = [1.0, 0.98 * np.exp(0.3j), 0.98 * np.exp(-0.3j)]


# Register custom pytest marks
def pytest_configure(config):
    """Register custom markers."""
    config.addinivalue_line("markers", "integration: marks tests as integration tests (deselect with '-m \"not integration\"')")
    config.addinivalue_line("markers", "slow: marks tests that take several seconds (deselect with '-m \"not slow\"')")
    config.addinivalue_line("markers", "full_scale: speed checks at 720x480, run with CDMD_FULL_SCALE=1")


@pytest.fixture
def planted():
    """Noiseless rank-3 plant: n=500, m=50, eigenvalues {1, 0.98 e^{+-0.3i}}."""
    return make_planted_dmd(500, 50, PLANTED_EIGENVALUES, seed=0)


@pytest.fixture
def static_frames():
    """Identical textured frames (32x24, m=20)."""
    rng = np.random.default_rng(3)
    frame = rng.uniform(50.0, 200.0, size=32 * 24)
    return FrameSequence(np.repeat(frame[:, None], 20, axis=1), 32, 24)


@pytest.fixture
def block_scene():
    """32x32 scene, m=60, one 4x4 block crossing between frames 15 and 45."""
    block = MovingObject(size=4, position=(0.0, 14.0), velocity=(28 / 29, 0.0), intensity=255.0,
                         start_frame=15, end_frame=45)
    return make_scene(32, 32, 60, [block], noise_sigma=0.0, seed=1)
