"""Synthetic ground-truth videos and planted low-rank matrices."""

from .generators import (
    PlantedDmd,
    MovingObject,
    OscillatingPatch,
    SyntheticScene,
    make_planted_dmd,
    make_scene,
    smooth_background,
    crossing_block_scene,
    random_scene,
)

__all__ = [
    'PlantedDmd', 'MovingObject', 'OscillatingPatch', 'SyntheticScene',
    'make_planted_dmd', 'make_scene', 'smooth_background', 'crossing_block_scene', 'random_scene',
]
