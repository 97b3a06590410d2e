"""Unit tests for unicycle kinematics and the random-walk policy."""
from __future__ import annotations

import math

import numpy as np
import pytest

from app.schemas.scenario import LimitsConfig, MotionNoiseConfig
from app.services.exceptions import InvalidArgumentError
from app.services.geometry import Pose2D
from app.services.motion import (
    Bounds,
    Control,
    MotionLimits,
    MotionNoise,
    odometry_delta,
    random_walk_policy,
    step_ideal,
    step_noisy,
)


def test_step_ideal_moves_along_previous_heading() -> None:
    state = Pose2D(1.0, 2.0, math.pi / 2)

    result = step_ideal(state, Control(1.0, 0.5), dt=2.0)

    assert result.x == pytest.approx(1.0)
    assert result.y == pytest.approx(4.0)
    assert result.phi == pytest.approx(math.pi / 2 + 1.0)


@pytest.mark.parametrize("dt", [0.0, -1.0])
def test_step_ideal_rejects_non_positive_dt(dt: float) -> None:
    with pytest.raises(InvalidArgumentError):
        step_ideal(Pose2D.identity(), Control(1.0, 0.0), dt)


def test_step_noisy_with_zero_noise_matches_ideal(rng: np.random.Generator) -> None:
    state = Pose2D(3.0, -1.0, 0.2)
    u = Control(0.8, -0.3)

    assert step_noisy(state, u, 1.0, MotionNoise.zero(), rng) == step_ideal(state, u, 1.0)


def test_step_noisy_spread_matches_noise(rng: np.random.Generator) -> None:
    noise = MotionNoise(0.1, 0.2, 0.01)
    state = Pose2D(0.0, 0.0, 0.0)
    samples = np.array(
        [step_noisy(state, Control(1.0, 0.0), 1.0, noise, rng).as_array() for _ in range(100_000)]
    )

    assert samples.mean(axis=0) == pytest.approx([1.0, 0.0, 0.0], abs=0.005)
    assert samples.std(axis=0) == pytest.approx([0.1, 0.2, 0.01], rel=0.05)


def test_motion_noise_from_config_converts_degrees() -> None:
    noise = MotionNoise.from_config(MotionNoiseConfig(sigma_x=0.1, sigma_y=0.2, sigma_phi_deg=0.5))

    assert noise.sigma_phi == pytest.approx(math.radians(0.5))
    assert np.diag(noise.covariance()) == pytest.approx([0.01, 0.04, math.radians(0.5) ** 2])
    assert not MotionNoise.zero().covariance().any()


def test_motion_noise_rejects_negative_sigma() -> None:
    with pytest.raises(InvalidArgumentError):
        MotionNoise(-0.1, 0.0, 0.0)


def test_odometry_delta_is_expressed_in_pre_step_frame() -> None:
    delta = odometry_delta(Control(2.0, 0.25), dt=1.0)

    assert delta.as_array() == pytest.approx([2.0, 0.0, 0.25])


def test_bounds_helpers() -> None:
    bounds = Bounds.from_size(10.0, 20.0)

    assert bounds.center == (5.0, 10.0)
    assert bounds.contains(10.0, 0.0)
    assert not bounds.contains(10.1, 0.0)
    assert bounds.clamp(Pose2D(-1.0, 25.0, 0.3)).as_array() == pytest.approx([0.0, 20.0, 0.3])
    assert bounds.distance_ahead(Pose2D(5.0, 10.0, 0.0)) == pytest.approx(5.0)


def test_bounds_rejects_empty_area() -> None:
    with pytest.raises(InvalidArgumentError):
        Bounds(0.0, 0.0, 0.0, 5.0)


def test_limits_from_config() -> None:
    limits = MotionLimits.from_config(LimitsConfig(v_min=0.2, v_max=0.9, omega_max=0.4))

    assert (limits.v_min, limits.v_max, limits.omega_max) == (0.2, 0.9, 0.4)


def test_random_walk_policy_keeps_robot_inside_bounds(rng: np.random.Generator) -> None:
    bounds = Bounds.from_size(20.0, 20.0)
    limits = MotionLimits()
    state = Pose2D(10.0, 10.0, 0.0)

    for _ in range(10_000):
        u = random_walk_policy(state, bounds, rng, limits)
        assert 0.0 <= u.v <= limits.v_max
        assert abs(u.omega) <= limits.omega_max
        state = step_ideal(state, u, 1.0)
        assert bounds.contains(state.x, state.y)


def test_random_walk_policy_turns_toward_center_near_wall(rng: np.random.Generator) -> None:
    bounds = Bounds.from_size(20.0, 20.0)
    state = Pose2D(19.5, 10.0, 0.0)

    u = random_walk_policy(state, bounds, rng)

    assert abs(u.omega) == pytest.approx(0.5)
    assert u.v <= 0.5 + 1e-12


def test_random_walk_policy_is_deterministic_under_a_fixed_seed() -> None:
    bounds = Bounds.from_size(20.0, 20.0)

    def walk(seed: int) -> list[Control]:
        generator = np.random.default_rng(seed)
        state = Pose2D(10.0, 10.0, 0.0)
        controls = []
        for _ in range(200):
            u = random_walk_policy(state, bounds, generator)
            controls.append(u)
            state = step_ideal(state, u, 1.0)
        return controls

    assert walk(7) == walk(7)
    assert walk(7) != walk(8)
