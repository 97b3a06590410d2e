"""Unit tests for the per-robot localization step and view fusion."""
from __future__ import annotations

import math

import numpy as np
import pytest

from app.core.scenario import parse_scenario
from app.schemas.scenario import ScenarioConfig
from app.services.exceptions import InvalidArgumentError
from app.services.geometry import Pose2D, se2_between, se2_compose
from app.services.localizer import (
    COVARIANCE_FLOOR,
    EstimatorParams,
    RobotLocalizer,
    RobotView,
    fuse_views,
    odometry_covariance,
    propagate_view,
)
from app.services.motion import Control, MotionNoise, step_ideal
from app.services.netsim import MessageBundle
from app.services.radio import measure

POSES = [Pose2D(5.0, 5.0, 0.0), Pose2D(15.0, 6.0, math.pi / 2), Pose2D(9.0, 14.0, -2.0)]
CONTROLS = [Control(1.0, 0.1), Control(0.6, -0.3), Control(0.4, 0.2)]


def _params(config: ScenarioConfig) -> EstimatorParams:
    return EstimatorParams.from_config(config)


def _inboxes(config: ScenarioConfig, poses: list[Pose2D], controls: list[Control], t: int = 1) -> list[MessageBundle]:
    """Bundles carrying exact poses and the RSSI heard at the successor poses."""

    successors = [step_ideal(pose, u, config.dt) for pose, u in zip(poses, controls)]
    bundles = []
    for receiver, rx in enumerate(successors):
        samples = tuple(
            measure(sender, receiver, math.hypot(rx.x - tx.x, rx.y - tx.y), config.path_loss, None, t)
            for sender, tx in enumerate(successors)
            if sender != receiver
        )
        bundles.append(MessageBundle(receiver, poses[receiver], np.zeros((3, 3)), controls[receiver], samples, t))
    return bundles


def test_estimator_params_from_config(small_scenario: ScenarioConfig) -> None:
    params = _params(small_scenario)

    assert params.k == 2
    assert params.cap == 8
    assert params.noise.sigma_phi == pytest.approx(math.radians(0.5))
    assert params.constraints.ball_radius == pytest.approx(math.sqrt(2) * small_scenario.area.diagonal)


def test_propagate_view_grows_covariance() -> None:
    view = RobotView(Pose2D(0.0, 0.0, 0.0), np.zeros((3, 3)))
    noise = MotionNoise(0.1, 0.1, 0.01)

    first = propagate_view(view, Control(1.0, 0.0), 1.0, noise)
    second = propagate_view(first, Control(1.0, 0.0), 1.0, noise)

    assert first.pose.as_array() == pytest.approx([1.0, 0.0, 0.0])
    assert first.covariance == pytest.approx(noise.covariance())
    assert np.trace(second.covariance) > np.trace(first.covariance)
    assert second.covariance[1, 2] == pytest.approx(1e-4)


def test_odometry_covariance_rotates_into_origin_frame() -> None:
    propagated = np.diag([0.04, 0.01, 0.001])

    rotated = odometry_covariance(Pose2D(0.0, 0.0, math.pi / 2), propagated)

    assert np.diag(rotated) == pytest.approx([0.01 + COVARIANCE_FLOOR, 0.04 + COVARIANCE_FLOOR, 0.001 + COVARIANCE_FLOOR])


def test_fuse_views_is_a_convex_combination() -> None:
    a = RobotView(Pose2D(0.0, 0.0, math.pi - 0.1), np.eye(3))
    b = RobotView(Pose2D(2.0, 4.0, -math.pi + 0.1), 3 * np.eye(3))

    fused = fuse_views([(1.0, a), (1.0, b)])

    assert fused.pose.position == pytest.approx([1.0, 2.0])
    assert abs(fused.pose.phi) == pytest.approx(math.pi)
    assert fused.covariance == pytest.approx(2 * np.eye(3))
    assert fuse_views([(0.3, a)]) is a


@pytest.mark.parametrize("weighted", [[], [(-1.0, RobotView(Pose2D.identity(), np.eye(3)))]])
def test_fuse_views_rejects_invalid_weights(weighted) -> None:
    with pytest.raises(InvalidArgumentError):
        fuse_views(weighted)


def test_noise_free_step_recovers_successor_poses(noise_free_scenario: ScenarioConfig) -> None:
    localizer = RobotLocalizer(1, _params(noise_free_scenario), np.random.default_rng(0))

    outcome = localizer.step(_inboxes(noise_free_scenario, POSES, CONTROLS), t=1)

    assert not outcome.fallback
    assert outcome.report.observable
    assert outcome.neighbours == [0, 1, 2]
    assert outcome.candidate_graphs >= 1
    assert len(outcome.solve_times) == outcome.candidate_graphs
    for robot, view in outcome.views.items():
        expected = step_ideal(POSES[robot], CONTROLS[robot], noise_free_scenario.dt)
        assert view.pose.position == pytest.approx(expected.position, abs=1e-6)
    assert localizer.lambda_dual == 0.0


def test_step_stores_hypotheses_for_later_iterations(small_scenario: ScenarioConfig) -> None:
    config = parse_scenario({**small_scenario.model_dump(), "path_loss": {"shadowing_sigma_db": 0.0}})
    localizer = RobotLocalizer(0, _params(config), np.random.default_rng(1))

    localizer.step(_inboxes(config, POSES, CONTROLS), t=1)

    assert set(localizer._hypotheses) == {1, 2}
    assert all(h.k == small_scenario.k for h in localizer._hypotheses.values())


def test_step_without_ranges_falls_back_to_priors(noise_free_scenario: ScenarioConfig) -> None:
    localizer = RobotLocalizer(0, _params(noise_free_scenario), np.random.default_rng(0))
    inbox = [
        MessageBundle(robot, pose, np.zeros((3, 3)), u, (), 1)
        for robot, (pose, u) in enumerate(zip(POSES, CONTROLS))
    ]

    outcome = localizer.step(inbox, t=1)

    assert outcome.fallback
    assert not outcome.report.observable
    assert outcome.solve_times == []
    for robot, view in outcome.views.items():
        assert view.pose == step_ideal(POSES[robot], CONTROLS[robot], noise_free_scenario.dt)


def test_step_with_too_few_robots_falls_back(noise_free_scenario: ScenarioConfig) -> None:
    config = parse_scenario({**noise_free_scenario.model_dump(), "min_connected_robots": 4})
    localizer = RobotLocalizer(2, _params(config), np.random.default_rng(0))

    outcome = localizer.step(_inboxes(config, POSES, CONTROLS), t=1)

    assert outcome.fallback


def test_step_requires_own_bundle(noise_free_scenario: ScenarioConfig) -> None:
    localizer = RobotLocalizer(2, _params(noise_free_scenario), np.random.default_rng(0))

    with pytest.raises(InvalidArgumentError):
        localizer.step(_inboxes(noise_free_scenario, POSES, CONTROLS)[:2], t=1)


def test_step_corrects_the_robots_own_pose(noise_free_scenario: ScenarioConfig) -> None:
    biased = Pose2D(POSES[1].x + 1.0, POSES[1].y, POSES[1].phi)
    inbox = [
        MessageBundle(b.sender, biased if b.sender == 1 else b.pose, 0.25 * np.eye(3), b.control, b.rssi_samples, 1)
        for b in _inboxes(noise_free_scenario, POSES, CONTROLS)
    ]
    localizer = RobotLocalizer(1, _params(noise_free_scenario), np.random.default_rng(0))
    truth = step_ideal(POSES[1], CONTROLS[1], noise_free_scenario.dt)

    outcome = localizer.step(inbox, t=1)

    own = outcome.views[1].pose
    assert not outcome.fallback
    assert math.dist(own.position, truth.position) < 1.0
    prior = propagate_view(RobotView(biased, 0.25 * np.eye(3)), CONTROLS[1], noise_free_scenario.dt, MotionNoise.zero())
    assert outcome.views[1].covariance[0, 0] < prior.covariance[0, 0]


def test_views_compose_the_relative_poses_with_the_own_estimate(noise_free_scenario: ScenarioConfig) -> None:
    localizer = RobotLocalizer(2, _params(noise_free_scenario), np.random.default_rng(0))

    outcome = localizer.step(_inboxes(noise_free_scenario, POSES, CONTROLS), t=1)

    own = outcome.views[2].pose
    assert set(outcome.relative) == {0, 1, 2}
    assert outcome.relative[2].as_array() == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)
    for robot, relative in outcome.relative.items():
        assert se2_compose(own, relative).as_array() == pytest.approx(outcome.views[robot].pose.as_array(), abs=1e-9)
    expected = se2_between(
        step_ideal(POSES[2], CONTROLS[2], noise_free_scenario.dt), step_ideal(POSES[0], CONTROLS[0], noise_free_scenario.dt)
    )
    assert outcome.relative[0].position == pytest.approx(expected.position, abs=1e-6)
