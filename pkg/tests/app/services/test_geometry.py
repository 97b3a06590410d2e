"""Unit tests for planar pose algebra."""
from __future__ import annotations

import math

import numpy as np
import pytest

from app.services.exceptions import InvalidArgumentError
from app.services.geometry import (
    Pose2D,
    circular_mean,
    rotation,
    se2_between,
    se2_compose,
    se2_inverse,
    wrap_angle,
    wrap_angles,
)


@pytest.mark.parametrize(
    "theta,expected",
    [
        (0.0, 0.0),
        (math.pi, math.pi),
        (-math.pi, math.pi),
        (3 * math.pi, math.pi),
        (-3 * math.pi / 2, math.pi / 2),
        (2 * math.pi + 0.25, 0.25),
    ],
)
def test_wrap_angle_maps_into_half_open_interval(theta: float, expected: float) -> None:
    assert wrap_angle(theta) == pytest.approx(expected)


def test_wrap_angle_is_identity_inside_interval() -> None:
    assert wrap_angle(1.2345) == 1.2345


def test_wrap_angle_is_idempotent() -> None:
    for theta in np.linspace(-50.0, 50.0, 1001):
        once = wrap_angle(float(theta))
        assert wrap_angle(once) == once


@pytest.mark.parametrize("theta", [math.nan, math.inf, -math.inf])
def test_wrap_angle_rejects_non_finite(theta: float) -> None:
    with pytest.raises(InvalidArgumentError):
        wrap_angle(theta)


def test_wrap_angles_matches_scalar_version() -> None:
    values = np.linspace(-20.0, 20.0, 401)
    wrapped = wrap_angles(values)

    assert np.all(wrapped > -math.pi)
    assert np.all(wrapped <= math.pi)
    assert wrapped == pytest.approx([wrap_angle(v) for v in values])


def test_pose_wraps_heading_and_rejects_non_finite_position() -> None:
    assert Pose2D(1.0, 2.0, 3 * math.pi).phi == pytest.approx(math.pi)
    with pytest.raises(InvalidArgumentError):
        Pose2D(math.nan, 0.0, 0.0)


def test_pose_array_conversion() -> None:
    pose = Pose2D.from_array([1.0, -2.0, 0.5])

    assert pose.as_array() == pytest.approx([1.0, -2.0, 0.5])
    assert pose.position == pytest.approx([1.0, -2.0])
    assert Pose2D.identity() == Pose2D(0.0, 0.0, 0.0)


def test_compose_translates_in_the_frame_of_the_first_pose() -> None:
    a = Pose2D(1.0, 1.0, math.pi / 2)
    b = Pose2D(2.0, 0.0, 0.0)

    result = se2_compose(a, b)

    assert result.as_array() == pytest.approx([1.0, 3.0, math.pi / 2])


def test_inverse_and_between_are_consistent(rng: np.random.Generator) -> None:
    for _ in range(200):
        a = Pose2D(*rng.uniform(-10, 10, 2), rng.uniform(-math.pi, math.pi))
        b = Pose2D(*rng.uniform(-10, 10, 2), rng.uniform(-math.pi, math.pi))

        identity = se2_compose(a, se2_inverse(a))
        assert identity.as_array() == pytest.approx([0.0, 0.0, 0.0], abs=1e-9)

        recovered = se2_compose(a, se2_between(a, b))
        assert recovered.x == pytest.approx(b.x, abs=1e-9)
        assert recovered.y == pytest.approx(b.y, abs=1e-9)
        assert wrap_angle(recovered.phi - b.phi) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize(
    "a,b,expected",
    [
        ((1.0, 0.0, math.pi / 2), (1.0, 0.0, 0.0), (1.0, 1.0, math.pi / 2)),
        ((0.0, 0.0, 0.0), (2.0, -1.0, 0.5), (2.0, -1.0, 0.5)),
        ((1.0, 2.0, math.pi), (1.0, 0.0, math.pi), (0.0, 2.0, 0.0)),
    ],
)
def test_compose_known_values(a, b, expected) -> None:
    result = se2_compose(Pose2D(*a), Pose2D(*b))

    assert result.x == pytest.approx(expected[0], abs=1e-12)
    assert result.y == pytest.approx(expected[1], abs=1e-12)
    assert wrap_angle(result.phi - expected[2]) == pytest.approx(0.0, abs=1e-12)


def test_between_known_value() -> None:
    result = se2_between(Pose2D(1.0, 1.0, math.pi / 2), Pose2D(1.0, 2.0, math.pi / 2))

    assert result.as_array() == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)


def test_compose_is_associative(rng: np.random.Generator) -> None:
    for _ in range(500):
        a, b, c = (Pose2D(*rng.uniform(-10, 10, 2), rng.uniform(-math.pi, math.pi)) for _ in range(3))

        left = se2_compose(se2_compose(a, b), c)
        right = se2_compose(a, se2_compose(b, c))

        assert left.position == pytest.approx(right.position, abs=1e-10)
        assert wrap_angle(left.phi - right.phi) == pytest.approx(0.0, abs=1e-12)


def test_between_round_trip_is_tight(rng: np.random.Generator) -> None:
    for _ in range(1000):
        a = Pose2D(*rng.uniform(-10, 10, 2), rng.uniform(-math.pi, math.pi))
        b = Pose2D(*rng.uniform(-10, 10, 2), rng.uniform(-math.pi, math.pi))

        recovered = se2_compose(a, se2_between(a, b))

        assert recovered.position == pytest.approx(b.position, abs=1e-12)
        assert wrap_angle(recovered.phi - b.phi) == pytest.approx(0.0, abs=1e-12)


def test_rotation_is_orthonormal() -> None:
    matrix = rotation(0.7)

    assert matrix @ matrix.T == pytest.approx(np.eye(2))
    assert np.linalg.det(matrix) == pytest.approx(1.0)


def test_circular_mean_handles_wraparound() -> None:
    assert abs(circular_mean([math.pi - 0.1, -math.pi + 0.1])) == pytest.approx(math.pi)
    assert circular_mean([0.2, 0.4], weights=[1.0, 0.0]) == pytest.approx(0.2)


def test_circular_mean_returns_identical_angles_exactly() -> None:
    assert circular_mean([0.3, 0.3, 0.3]) == 0.3


def test_circular_mean_requires_input() -> None:
    with pytest.raises(InvalidArgumentError):
        circular_mean([])
