"""Measurement-matrix families for compressing snapshot matrices."""

from .operators import (
    SensingKind,
    SensingOperator,
    make_sensing,
    apply,
    default_sparsity,
    required_measurements,
)

__all__ = ['SensingKind', 'SensingOperator', 'make_sensing', 'apply', 'default_sparsity', 'required_measurements']
