"""Per-robot relative localization step and the team fusion of neighbour views."""
from __future__ import annotations

import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from app.schemas.scenario import ConstraintSet, LMConfig, PathLossParams, ScenarioConfig

from .exceptions import InvalidArgumentError
from .geometry import Pose2D, circular_mean, rotation, se2_between, se2_compose
from .hypothesis import (
    Candidate,
    HypothesisSet,
    enumerate_candidate_graphs,
    pad_candidates,
    propagate_candidates,
    range_log_likelihood,
    select_top_k,
)
from .motion import Control, MotionNoise, odometry_delta, step_ideal
from .netsim import MessageBundle
from .optimizer import OdometryInput, build_problem, dual_update, extract_relative_poses, select_best, solve_lm
from .radio import RangeMeasurement, range_sigma, symmetrize
from .relgraph import ObservabilityReport, RelGraph, build_rpmg, form_erpmg, observability_check

logger = logging.getLogger(__name__)

COVARIANCE_FLOOR = 1e-6


@dataclass(slots=True, frozen=True)
class EstimatorParams:
    """Everything a robot needs to run one localization step."""

    dt: float
    noise: MotionNoise
    k: int
    cap: int
    samples_per_candidate: int
    sigma_r: float
    range_sigma_model: str
    path_loss: PathLossParams
    comm_radius: float
    state_dim: int
    min_connected_robots: int
    lm: LMConfig
    constraints: ConstraintSet

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> EstimatorParams:
        return cls(
            dt=config.dt,
            noise=MotionNoise.from_config(config.motion_noise),
            k=config.k,
            cap=config.cap,
            samples_per_candidate=config.samples_per_candidate,
            sigma_r=config.sigma_r,
            range_sigma_model=config.range_sigma_model,
            path_loss=config.path_loss,
            comm_radius=config.comm_radius,
            state_dim=config.state_dim,
            min_connected_robots=config.min_connected_robots,
            lm=config.lm,
            constraints=config.constraint_set(),
        )


@dataclass(slots=True, frozen=True, eq=False)
class RobotView:
    pose: Pose2D
    covariance: np.ndarray


@dataclass(slots=True)
class StepOutcome:
    """Views produced by one robot in one iteration, plus diagnostics.

    `relative` holds every neighbour's pose in the robot's own frame; `views` are those poses
    composed with the robot's own estimate.
    """

    robot_id: int
    neighbours: list[int]
    views: dict[int, RobotView]
    relative: dict[int, Pose2D]
    report: ObservabilityReport
    erpmg: RelGraph
    fallback: bool
    solve_times: list[float] = field(default_factory=list)
    candidate_graphs: int = 0


def _floored(covariance: np.ndarray) -> np.ndarray:
    symmetric = (covariance + covariance.T) / 2.0
    return symmetric + COVARIANCE_FLOOR * np.eye(3)


def propagate_view(view: RobotView, u: Control, dt: float, noise: MotionNoise) -> RobotView:
    """Dead-reckon a view one step and grow its covariance through the linearized motion model."""

    pose = view.pose
    jacobian = np.array(
        [
            [1.0, 0.0, -u.v * dt * math.sin(pose.phi)],
            [0.0, 1.0, u.v * dt * math.cos(pose.phi)],
            [0.0, 0.0, 1.0],
        ]
    )
    covariance = jacobian @ view.covariance @ jacobian.T + noise.covariance()
    return RobotView(step_ideal(pose, u, dt), (covariance + covariance.T) / 2.0)


def odometry_covariance(origin: Pose2D, propagated: np.ndarray) -> np.ndarray:
    """Covariance of the odometry residual, which is expressed in the origin's frame."""

    rotate = np.eye(3)
    rotate[:2, :2] = rotation(origin.phi).T
    return _floored(rotate @ propagated @ rotate.T)


def fuse_views(weighted: Sequence[tuple[float, RobotView]]) -> RobotView:
    """Convex combination of views: positions and covariances linearly, headings by circular mean."""

    if not weighted:
        raise InvalidArgumentError("fuse_views requires at least one view")
    weights = np.array([w for w, _ in weighted], dtype=float)
    if np.any(weights < 0.0) or weights.sum() <= 0.0:
        raise InvalidArgumentError("Fusion weights must be non-negative with a positive sum")
    weights = weights / weights.sum()
    if len(weighted) == 1:
        return weighted[0][1]
    positions = np.array([v.pose.position for _, v in weighted])
    x, y = weights @ positions
    phi = circular_mean([v.pose.phi for _, v in weighted], weights)
    covariance = np.einsum("k,kij->ij", weights, np.array([v.covariance for _, v in weighted]))
    return RobotView(Pose2D(x, y, phi), covariance)


class RobotLocalizer:
    """One robot's estimator: hypothesis sets for its neighbours and a local dual variable."""

    def __init__(self, robot_id: int, params: EstimatorParams, rng: np.random.Generator) -> None:
        self.robot_id = robot_id
        self.params = params
        self.rng = rng
        self.lambda_dual = 0.0
        self._hypotheses: dict[int, HypothesisSet] = {}

    def _previous_set(self, bundle: MessageBundle, local_id: int) -> HypothesisSet:
        stored = self._hypotheses.get(bundle.sender)
        if stored is None:
            return HypothesisSet.single(local_id, bundle.pose)
        # Keep the spread of the stored set but centre it on the broadcast estimate.
        best = stored.best.pose
        moved = [
            Candidate(se2_compose(bundle.pose, se2_between(best, c.pose)), c.log_weight) for c in stored.candidates
        ]
        return HypothesisSet(local_id, tuple(moved))

    def _range_sigmas(self, erpmg: RelGraph) -> dict[tuple[int, int], float]:
        if self.params.range_sigma_model == "fixed":
            return {}
        return {(i, j): range_sigma(w, self.params.path_loss, self.params.sigma_r) for i, j, w in erpmg.edges}

    def step(self, inbox: Sequence[MessageBundle], t: int) -> StepOutcome:
        """Run one localization iteration on the bundles received at iteration `t`."""

        params = self.params
        bundles = sorted(inbox, key=lambda bundle: bundle.sender)
        nodes = [bundle.sender for bundle in bundles]
        if self.robot_id not in nodes:
            raise InvalidArgumentError(f"Robot {self.robot_id} must receive its own bundle")
        local = {robot: idx for idx, robot in enumerate(nodes)}
        me = local[self.robot_id]

        priors = [
            propagate_view(RobotView(b.pose, b.covariance), b.control, params.dt, params.noise) for b in bundles
        ]
        measurements = [
            RangeMeasurement(local[m.from_id], local[m.to_id], m.rssi_dbm, m.distance_m, m.timestamp)
            for b in bundles
            for m in b.rssi_samples
            if m.from_id in local and m.to_id in local
        ]
        rpmg = build_rpmg(measurements, len(nodes), params.comm_radius)
        erpmg = form_erpmg(rpmg, [b.control for b in bundles], [b.pose for b in bundles])
        report = observability_check(erpmg, params.state_dim)

        if not report.observable or len(nodes) < params.min_connected_robots:
            logger.info("Robot %s at t=%s: graph not observable, dead-reckoning %s views", self.robot_id, t, len(nodes))
            own = priors[me].pose
            return StepOutcome(
                robot_id=self.robot_id,
                neighbours=nodes,
                views={nodes[idx]: prior for idx, prior in enumerate(priors)},
                relative={nodes[idx]: se2_between(own, prior.pose) for idx, prior in enumerate(priors)},
                report=report,
                erpmg=erpmg,
                fallback=True,
            )

        merged = [m for m in symmetrize(measurements) if m.distance_m <= params.comm_radius]
        peer_positions = {idx: prior.pose for idx, prior in enumerate(priors)}
        hypotheses: list[HypothesisSet] = []
        for idx, bundle in enumerate(bundles):
            if idx == me:
                hypotheses.append(HypothesisSet.single(idx, priors[idx].pose))
                continue
            previous = self._previous_set(bundle, idx)
            children = [Candidate(priors[idx].pose, previous.best.log_weight)]
            children += propagate_candidates(
                previous, bundle.control, params.dt, params.noise, params.samples_per_candidate, self.rng
            )
            peers = {peer: pose for peer, pose in peer_positions.items() if peer != idx}
            scored = [
                Candidate(c.pose, c.log_weight + range_log_likelihood(c.pose, peers, merged, params.sigma_r, robot_id=idx))
                for c in children
            ]
            top = pad_candidates(select_top_k(scored, params.k, robot_id=idx), params.k, params.noise, self.rng)
            hypotheses.append(top)
            self._hypotheses[bundle.sender] = top

        graphs = enumerate_candidate_graphs(hypotheses, erpmg, params.cap)
        odometry = {
            idx: OdometryInput(
                origin=bundle.pose,
                delta=odometry_delta(bundle.control, params.dt),
                covariance=odometry_covariance(bundle.pose, priors[idx].covariance),
            )
            for idx, bundle in enumerate(bundles)
        }
        sigmas = self._range_sigmas(erpmg)

        solutions = []
        problems = []
        solve_times = []
        for index, candidate_graph in enumerate(graphs):
            # The robot's own pose is corrected by the ranges too; its prior holds the gauge.
            problem = build_problem(
                candidate_graph, odometry, me, sigma_r=params.sigma_r, range_sigmas=sigmas, float_anchor=True
            )
            started = time.perf_counter()
            solution = solve_lm(
                problem,
                params.lm,
                params.constraints,
                source_index=index,
                joint_log_weight=candidate_graph.joint_log_weight,
            )
            solve_times.append(time.perf_counter() - started)
            solutions.append(solution)
            problems.append(problem)

        best = select_best(solutions)
        self.lambda_dual = dual_update(self.lambda_dual, best.vertices, problems[best.source_index], params.constraints)

        own = best.vertices[me]
        in_own_frame = extract_relative_poses(best, me)
        relative = {robot: in_own_frame[idx] for idx, robot in enumerate(nodes)}
        views = {
            robot: RobotView(se2_compose(own, relative[robot]), _floored(best.covariances[idx]))
            for idx, robot in enumerate(nodes)
        }
        return StepOutcome(
            robot_id=self.robot_id,
            neighbours=nodes,
            views=views,
            relative=relative,
            report=report,
            erpmg=erpmg,
            fallback=False,
            solve_times=solve_times,
            candidate_graphs=len(graphs),
        )
