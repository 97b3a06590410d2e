"""Scenario runner: ground truth simulation, team localization, metrics and summaries."""
from __future__ import annotations

import logging
import math
import time
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from app.schemas.graph import GraphDocument, ObservabilityReportRead
from app.schemas.report import SummaryReport
from app.schemas.scenario import ScenarioConfig

from .exceptions import ConfigurationError, InvalidArgumentError, NumericalError
from .geometry import Pose2D, se2_between
from .localizer import EstimatorParams, RobotLocalizer, RobotView, StepOutcome, fuse_views, propagate_view
from .motion import Bounds, Control, MotionLimits, MotionNoise, random_walk_policy, step_noisy
from .netsim import AssumptionReport, MessageBundle, TimeVaryingNetwork, exchange, snapshot_from_positions, validate_assumptions
from .radio import RangeMeasurement, measure

logger = logging.getLogger(__name__)

Estimator = Literal["graph", "dead_reckoning"]

# Children of each trial's seed, one independent stream per concern.
_STREAMS = ("truth", "policy", "radio", "spawn", "estimator", "network")
_SPAWN_ATTEMPTS = 10_000
_MIN_DISTANCE = 1e-3


@dataclass(slots=True, eq=False)
class TrialResult:
    """One trial. Trajectory arrays have shape (iterations + 1, n_robots, 3)."""

    trial: int
    truth: np.ndarray
    estimates: np.ndarray
    solve_times: list[float]
    observable: np.ndarray
    rmse_per_robot: np.ndarray
    rmse: float
    wall_time: float
    cpu_time: float
    assumptions: AssumptionReport | None = None
    graph_records: list[dict] = field(default_factory=list)
    network: TimeVaryingNetwork | None = None

    @property
    def cpu_utilisation(self) -> float:
        return self.cpu_time / self.wall_time if self.wall_time > 0.0 else 0.0


@dataclass(slots=True, eq=False)
class SimResult:
    config: ScenarioConfig
    estimator: str
    trials: list[TrialResult]

    @property
    def rmse(self) -> list[float]:
        return [trial.rmse for trial in self.trials]


def rmse(est: Sequence[Pose2D] | np.ndarray, truth: Sequence[Pose2D] | np.ndarray) -> float:
    """Root mean squared position error over timesteps; headings are ignored."""

    est_xy = _positions(est)
    truth_xy = _positions(truth)
    if est_xy.shape != truth_xy.shape:
        raise InvalidArgumentError(f"Trajectory lengths differ: {len(est_xy)} vs {len(truth_xy)}")
    if len(est_xy) == 0:
        raise InvalidArgumentError("rmse requires at least one timestep")
    return float(np.sqrt(np.mean(np.sum((est_xy - truth_xy) ** 2, axis=1))))


def _positions(trajectory: Sequence[Pose2D] | np.ndarray) -> np.ndarray:
    if isinstance(trajectory, np.ndarray):
        return np.asarray(trajectory, dtype=float).reshape(len(trajectory), -1)[:, :2]
    return np.array([[pose.x, pose.y] for pose in trajectory], dtype=float).reshape(-1, 2)


def _spawn(config: ScenarioConfig, bounds: Bounds, rng: np.random.Generator) -> list[Pose2D]:
    poses: list[Pose2D] = []
    for _ in range(_SPAWN_ATTEMPTS):
        x = float(rng.uniform(bounds.x_min, bounds.x_max))
        y = float(rng.uniform(bounds.y_min, bounds.y_max))
        if all(math.hypot(x - p.x, y - p.y) >= config.min_separation for p in poses):
            poses.append(Pose2D(x, y, float(rng.uniform(-math.pi, math.pi))))
            if len(poses) == config.n_robots:
                return poses
    raise ConfigurationError(
        f"Could not place {config.n_robots} robots {config.min_separation} m apart in the configured area"
    )


def _rssi_samples(truth: list[Pose2D], config: ScenarioConfig, rng: np.random.Generator, t: int) -> list[list[RangeMeasurement]]:
    """Per receiver: the RSSI of every robot heard within radio range."""

    samples: list[list[RangeMeasurement]] = [[] for _ in truth]
    for receiver, rx in enumerate(truth):
        for sender, tx in enumerate(truth):
            if sender == receiver:
                continue
            distance = max(math.hypot(rx.x - tx.x, rx.y - tx.y), _MIN_DISTANCE)
            if distance > config.comm_radius:
                continue
            samples[receiver].append(measure(sender, receiver, distance, config.path_loss, rng, t))
    return samples


def _frame(origin: Pose2D, poses: Sequence[Pose2D]) -> np.ndarray:
    return np.array([se2_between(origin, pose).as_array() for pose in poses])


def _graph_record(t: int, outcome: StepOutcome) -> dict:
    return {
        "t": t,
        "robot": outcome.robot_id,
        "neighbours": outcome.neighbours,
        "fallback": outcome.fallback,
        "candidate_graphs": outcome.candidate_graphs,
        "relative": {str(robot): pose.as_array().tolist() for robot, pose in outcome.relative.items()},
        "erpmg": GraphDocument.from_domain(outcome.erpmg).model_dump(),
        "observability": ObservabilityReportRead.from_domain(outcome.report).model_dump(),
    }


def run_trial(config: ScenarioConfig, trial: int, estimator: Estimator = "graph") -> TrialResult:
    """Simulate one trial; both estimators consume identical truth, policy and radio streams."""

    wall_start, cpu_start = time.perf_counter(), time.process_time()
    streams = dict(zip(_STREAMS, np.random.SeedSequence([config.seed, trial]).spawn(len(_STREAMS))))
    truth_rng = np.random.default_rng(streams["truth"])
    policy_rng = np.random.default_rng(streams["policy"])
    radio_rng = np.random.default_rng(streams["radio"])
    network_rng = np.random.default_rng(streams["network"])
    estimator_seeds = streams["estimator"].spawn(config.n_robots)

    params = EstimatorParams.from_config(config)
    bounds = Bounds.from_size(config.area.width, config.area.height)
    limits = MotionLimits.from_config(config.limits)
    noise = MotionNoise.from_config(config.motion_noise)
    n = config.n_robots

    truth = _spawn(config, bounds, np.random.default_rng(streams["spawn"]))
    origin = truth[0]
    fused = [RobotView(pose, np.zeros((3, 3))) for pose in truth]
    localizers = [RobotLocalizer(robot, params, np.random.default_rng(estimator_seeds[robot])) for robot in range(n)]
    network = TimeVaryingNetwork(n)

    truth_track = [_frame(origin, truth)]
    estimate_track = [_frame(origin, [view.pose for view in fused])]
    observable = np.zeros((config.iterations, n), dtype=bool)
    solve_times: list[float] = []
    graph_records: list[dict] = []

    for t in range(1, config.iterations + 1):
        controls = [random_walk_policy(pose, bounds, policy_rng, limits, config.dt) for pose in truth]
        truth = [bounds.clamp(step_noisy(pose, u, config.dt, noise, truth_rng)) for pose, u in zip(truth, controls)]
        links, weights = snapshot_from_positions(np.array([pose.position for pose in truth]), config.comm_radius)
        network.append(links, weights)
        samples = _rssi_samples(truth, config, radio_rng, t)

        if estimator == "dead_reckoning":
            fused = [propagate_view(view, u, config.dt, noise) for view, u in zip(fused, controls)]
        else:
            fused = _graph_iteration(t, fused, controls, samples, network, localizers, config, network_rng, observable, solve_times, graph_records)

        for view in fused:
            if not (np.all(np.isfinite(view.pose.as_array())) and np.all(np.isfinite(view.covariance))):
                raise NumericalError(f"Non-finite estimate in trial {trial} at iteration {t}")
        truth_track.append(_frame(origin, truth))
        estimate_track.append(_frame(origin, [view.pose for view in fused]))

    truth_array = np.array(truth_track)
    estimate_array = np.array(estimate_track)
    per_robot = np.array([rmse(estimate_array[:, r], truth_array[:, r]) for r in range(n)])
    aggregate = float(np.sqrt(np.mean(per_robot**2)))
    assumptions = validate_assumptions(network, config.network.xi, config.network.window)
    logger.info("Trial %s (%s) finished: RMSE %.3f m", trial, estimator, aggregate)
    return TrialResult(
        trial=trial,
        truth=truth_array,
        estimates=estimate_array,
        solve_times=solve_times,
        observable=observable,
        rmse_per_robot=per_robot,
        rmse=aggregate,
        wall_time=time.perf_counter() - wall_start,
        cpu_time=time.process_time() - cpu_start,
        assumptions=assumptions,
        graph_records=graph_records,
        network=network,
    )


def _graph_iteration(
    t: int,
    fused: list[RobotView],
    controls: list[Control],
    samples: list[list[RangeMeasurement]],
    network: TimeVaryingNetwork,
    localizers: list[RobotLocalizer],
    config: ScenarioConfig,
    network_rng: np.random.Generator,
    observable: np.ndarray,
    solve_times: list[float],
    graph_records: list[dict],
) -> list[RobotView]:
    outboxes = [
        MessageBundle(robot, view.pose, view.covariance, controls[robot], tuple(samples[robot]), t)
        for robot, view in enumerate(fused)
    ]
    inboxes = exchange(network, t - 1, outboxes, config.network.drop_probability, network_rng)

    outcomes = [localizer.step(inbox, t) for localizer, inbox in zip(localizers, inboxes)]
    for outcome in outcomes:
        observable[t - 1, outcome.robot_id] = not outcome.fallback
        solve_times.extend(outcome.solve_times)
        graph_records.append(_graph_record(t, outcome))

    weights = network.at(t - 1).weights
    updated = []
    for robot in range(len(fused)):
        views = [
            (float(weights[robot, outcome.robot_id]), outcome.views[robot])
            for outcome in outcomes
            if robot in outcome.views and weights[robot, outcome.robot_id] > 0.0
        ]
        updated.append(fuse_views(views))
    return updated


def check_scenario(config: ScenarioConfig) -> None:
    """Reject scenarios whose robots cannot be spawned apart in the configured area."""

    disc = math.pi * (config.min_separation / 2.0) ** 2
    if config.n_robots * disc > config.area.width * config.area.height:
        raise ConfigurationError(
            f"{config.n_robots} robots cannot be kept {config.min_separation} m apart in "
            f"a {config.area.width} x {config.area.height} m area"
        )


def _run(config: ScenarioConfig, estimator: Estimator, max_workers: int) -> SimResult:
    check_scenario(config)

    trials = range(config.trials)
    if max_workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run_trial, [config] * config.trials, trials, [estimator] * config.trials))
    else:
        results = [run_trial(config, trial, estimator) for trial in trials]
    return SimResult(config=config, estimator=estimator, trials=results)


def run_scenario(cfg: ScenarioConfig, *, max_workers: int = 1) -> SimResult:
    """Run every trial of the scenario with the graph-optimization estimator."""

    return _run(cfg, "graph", max_workers)


def dead_reckoning_baseline(cfg: ScenarioConfig, *, max_workers: int = 1) -> SimResult:
    """Same trials and noise draws, estimates from integrated odometry only."""

    return _run(cfg, "dead_reckoning", max_workers)


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    array = np.asarray(values, dtype=float)
    return float(array.mean()), float(array.std())


def summarize(results: Sequence[SimResult], baseline: Sequence[SimResult] | None = None) -> SummaryReport:
    """Aggregate trial metrics; standard deviations are population values."""

    if not results:
        raise InvalidArgumentError("summarize requires at least one result")
    trials = [trial for result in results for trial in result.trials]
    rmse_mean, rmse_std = _mean_std([trial.rmse for trial in trials])
    times_ms = [1000.0 * value for trial in trials for value in trial.solve_times]
    time_mean, time_std = _mean_std(times_ms)
    flags = [trial.observable for trial in trials if trial.observable.size]
    failure_rate = float(1.0 - np.mean(np.concatenate([f.ravel() for f in flags]))) if flags else 0.0
    diagonal = results[0].config.area.diagonal

    baseline_mean = None
    ratio = None
    if baseline:
        baseline_mean, _ = _mean_std([trial.rmse for result in baseline for trial in result.trials])
        ratio = rmse_mean / baseline_mean if baseline_mean > 0.0 else None

    return SummaryReport(
        trials=len(trials),
        rmse_mean=rmse_mean,
        rmse_std=rmse_std,
        rmse_over_diagonal=rmse_mean / diagonal,
        solve_time_mean_ms=time_mean,
        solve_time_std_ms=time_std,
        solve_time_median_ms=float(np.median(times_ms)) if times_ms else 0.0,
        solves=len(times_ms),
        observability_failure_rate=failure_rate,
        cpu_utilisation=float(np.mean([trial.cpu_utilisation for trial in trials])),
        baseline_rmse_mean=baseline_mean,
        rmse_ratio=ratio,
    )
