"""Command-line entry points."""

from .main import main, build_parser, pipeline_config

__all__ = ['main', 'build_parser', 'pipeline_config']
