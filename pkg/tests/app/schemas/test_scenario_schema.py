"""Validation tests for scenario configuration models."""
from __future__ import annotations

import math

import pytest
from pydantic import ValidationError

from app.schemas.scenario import ConstraintSet, LimitsConfig, LMConfig, PathLossParams, ScenarioConfig


def test_lm_defaults() -> None:
    config = LMConfig()

    assert (config.lambda0, config.lambda_up, config.lambda_down) == (1e-4, 10.0, 0.5)
    assert (config.max_iters, config.abs_tol, config.rel_tol) == (50, 1e-9, 1e-6)


@pytest.mark.parametrize(
    "overrides",
    [{"lambda0": 0.0}, {"lambda_up": 1.0}, {"lambda_down": 0.0}, {"lambda_down": 1.0}, {"max_iters": 0}],
)
def test_lm_config_rejects_invalid_damping(overrides: dict) -> None:
    with pytest.raises(ValidationError):
        LMConfig(**overrides)


@pytest.mark.parametrize("exponent", [1.9, 6.1])
def test_path_loss_exponent_bounds(exponent: float) -> None:
    with pytest.raises(ValidationError):
        PathLossParams(exponent=exponent)


def test_constraint_set_requires_positive_radius_and_gamma() -> None:
    with pytest.raises(ValidationError):
        ConstraintSet(ball_radius=0.0)
    with pytest.raises(ValidationError):
        ConstraintSet(ball_radius=1.0, gamma=0.0)
    assert ConstraintSet(ball_radius=1.0).lambda_dual == 0.0


def test_limits_require_ordered_speeds() -> None:
    with pytest.raises(ValidationError):
        LimitsConfig(v_min=1.5, v_max=1.0)


def test_scenario_models_are_frozen() -> None:
    config = ScenarioConfig()

    with pytest.raises(ValidationError):
        config.n_robots = 7
    assert config.area.diagonal == pytest.approx(math.hypot(60.0, 60.0))
