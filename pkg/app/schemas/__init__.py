"""Pydantic documents for configuration, files and the HTTP surface."""
from .scenario import (
    AreaConfig,
    ConstraintConfig,
    ConstraintSet,
    LimitsConfig,
    LMConfig,
    MotionNoiseConfig,
    NetworkConfig,
    PathLossParams,
    ScenarioConfig,
)

__all__ = [
    "AreaConfig",
    "ConstraintConfig",
    "ConstraintSet",
    "LimitsConfig",
    "LMConfig",
    "MotionNoiseConfig",
    "NetworkConfig",
    "PathLossParams",
    "ScenarioConfig",
]
