"""Tendon-based shoulder proprioception simulator.

Angles are degrees, lengths millimetres. Sensor arrays are ordered F, SF, SR, R.
"""

from ._core import (
    TENDONS,
    Config,
    ConfigError,
    Dataset,
    DegenerateScaleError,
    DimensionError,
    Error,
    InvalidPathError,
    Layout,
    Model,
    ParseError,
    SensorEmulation,
    TrainingDivergedError,
    UnknownTendonError,
    ValidationError,
    arc_length,
    arm_axis,
    default_layout,
    evaluate_rmse,
    humerus_rotation,
    loop_widths,
    monotonicity,
    protocol_suite,
    synthesize,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
