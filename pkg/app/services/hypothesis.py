"""Per-robot candidate poses and candidate-graph enumeration."""
from __future__ import annotations

import heapq
import itertools
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .exceptions import InvalidArgumentError
from .geometry import Pose2D
from .motion import Control, MotionNoise, step_noisy
from .radio import RangeMeasurement
from .relgraph import RelGraph

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-9


@dataclass(slots=True, frozen=True)
class Candidate:
    pose: Pose2D
    log_weight: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.log_weight):
            raise InvalidArgumentError(f"Candidate log-weight must be finite, got {self.log_weight}")


@dataclass(slots=True, frozen=True)
class HypothesisSet:
    """The k retained candidates of one robot, softmax-normalized."""

    robot_id: int
    candidates: tuple[Candidate, ...]

    def __post_init__(self) -> None:
        if not self.candidates:
            raise InvalidArgumentError(f"Hypothesis set for robot {self.robot_id} is empty")
        total = float(logsumexp([c.log_weight for c in self.candidates]))
        if abs(total) > NORMALIZATION_TOLERANCE:
            raise InvalidArgumentError(f"Hypothesis weights for robot {self.robot_id} are not normalized")

    @classmethod
    def single(cls, robot_id: int, pose: Pose2D) -> HypothesisSet:
        return cls(robot_id, (Candidate(pose, 0.0),))

    @classmethod
    def normalized(cls, robot_id: int, candidates: Sequence[Candidate]) -> HypothesisSet:
        log_weights = np.array([c.log_weight for c in candidates], dtype=float)
        shifted = log_weights - logsumexp(log_weights)
        return cls(robot_id, tuple(Candidate(c.pose, float(w)) for c, w in zip(candidates, shifted)))

    @property
    def k(self) -> int:
        return len(self.candidates)

    @property
    def weights(self) -> np.ndarray:
        return np.exp([c.log_weight for c in self.candidates])

    @property
    def best(self) -> Candidate:
        return max(self.candidates, key=lambda c: c.log_weight)


@dataclass(slots=True, frozen=True)
class CandidateGraph:
    """One candidate per robot, with predicted ranges on the measured edges."""

    assignment: tuple[int, ...]
    joint_log_weight: float
    poses: tuple[Pose2D, ...]
    graph: RelGraph
    measured: RelGraph


def propagate_candidates(
    prev: HypothesisSet,
    u: Control,
    dt: float,
    noise: MotionNoise,
    samples_per_candidate: int,
    rng: np.random.Generator,
) -> list[Candidate]:
    """Spawn `samples_per_candidate` noisy successors of every candidate; weights are inherited."""

    if samples_per_candidate < 1:
        raise InvalidArgumentError(f"samples_per_candidate must be at least 1, got {samples_per_candidate}")
    spawned: list[Candidate] = []
    for parent in prev.candidates:
        for _ in range(samples_per_candidate):
            spawned.append(Candidate(step_noisy(parent.pose, u, dt, noise, rng), parent.log_weight))
    return spawned


def range_log_likelihood(
    candidate_pos: Pose2D,
    peer_positions: Mapping[int, Pose2D],
    measured: Sequence[RangeMeasurement],
    sigma_r: float,
    robot_id: int | None = None,
) -> float:
    """Gaussian range log-likelihood of a candidate position; 0 means every range is met.

    When `robot_id` is given only measurements touching that robot count. Otherwise the peer
    of each measurement is whichever endpoint appears in `peer_positions`.
    """

    if not sigma_r > 0.0:
        raise InvalidArgumentError(f"sigma_r must be positive, got {sigma_r}")
    total = 0.0
    for measurement in measured:
        if robot_id is not None:
            peer = measurement.peer_of(robot_id)
        elif measurement.to_id in peer_positions:
            peer = measurement.to_id
        else:
            peer = measurement.from_id
        if peer is None or peer not in peer_positions:
            continue
        other = peer_positions[peer]
        residual = math.hypot(candidate_pos.x - other.x, candidate_pos.y - other.y) - measurement.distance_m
        total -= residual * residual / (2.0 * sigma_r * sigma_r)
    return total


def select_top_k(candidates: Sequence[Candidate], k: int, robot_id: int = 0) -> HypothesisSet:
    """Keep the k highest-weighted candidates (ties by index) and softmax-normalize them."""

    if k < 1:
        raise InvalidArgumentError(f"k must be at least 1, got {k}")
    if not candidates:
        raise InvalidArgumentError("select_top_k requires at least one candidate")
    order = sorted(range(len(candidates)), key=lambda idx: (-candidates[idx].log_weight, idx))
    return HypothesisSet.normalized(robot_id, [candidates[idx] for idx in order[:k]])


def pad_candidates(hset: HypothesisSet, k: int, noise: MotionNoise, rng: np.random.Generator) -> HypothesisSet:
    """Refill a short set to k candidates by perturbing its best member with motion noise."""

    if hset.k >= k:
        return hset
    best = hset.best
    logger.debug("Robot %s has %s of %s candidates; resampling around the best", hset.robot_id, hset.k, k)
    padded = list(hset.candidates)
    while len(padded) < k:
        ex, ey, ephi = rng.normal(0.0, (noise.sigma_x, noise.sigma_y, noise.sigma_phi))
        pose = Pose2D(best.pose.x + ex, best.pose.y + ey, best.pose.phi + ephi)
        padded.append(Candidate(pose, best.log_weight))
    return HypothesisSet.normalized(hset.robot_id, padded)


def _ranked(hset: HypothesisSet) -> list[int]:
    return sorted(range(hset.k), key=lambda idx: (-hset.candidates[idx].log_weight, idx))


def _candidate_graph(hyps: Sequence[HypothesisSet], measured: RelGraph, assignment: tuple[int, ...]) -> CandidateGraph:
    poses = tuple(h.candidates[a].pose for h, a in zip(hyps, assignment))
    predicted = []
    for i, j, _ in measured.edges:
        distance = math.hypot(poses[i].x - poses[j].x, poses[i].y - poses[j].y)
        if distance > 0.0:
            predicted.append((i, j, distance))
    return CandidateGraph(
        assignment=assignment,
        joint_log_weight=sum(h.candidates[a].log_weight for h, a in zip(hyps, assignment)),
        poses=poses,
        graph=RelGraph(measured.n, tuple(predicted)),
        measured=measured,
    )


def enumerate_candidate_graphs(hyps: Sequence[HypothesisSet], measured: RelGraph, cap: int) -> list[CandidateGraph]:
    """Return at most `cap` assignments in non-increasing joint log-weight.

    Small spaces are enumerated exhaustively; larger ones are expanded best-first from the
    all-best assignment, which yields the exact top-`cap` assignments.
    """

    if cap < 1:
        raise InvalidArgumentError(f"cap must be at least 1, got {cap}")
    if len(hyps) != measured.n:
        raise InvalidArgumentError("One hypothesis set per graph node is required")

    ranked = [_ranked(h) for h in hyps]
    rank_weights = [[h.candidates[idx].log_weight for idx in order] for h, order in zip(hyps, ranked)]

    def joint(ranks: tuple[int, ...]) -> float:
        return sum(weights[r] for weights, r in zip(rank_weights, ranks))

    total = math.prod(h.k for h in hyps)
    if total <= cap:
        rank_tuples = sorted(itertools.product(*(range(h.k) for h in hyps)), key=lambda ranks: (-joint(ranks), ranks))
    else:
        start = tuple(0 for _ in hyps)
        frontier: list[tuple[float, tuple[int, ...]]] = [(-joint(start), start)]
        seen = {start}
        rank_tuples = []
        while frontier and len(rank_tuples) < cap:
            _, ranks = heapq.heappop(frontier)
            rank_tuples.append(ranks)
            for robot in range(len(ranks)):
                if ranks[robot] + 1 >= hyps[robot].k:
                    continue
                successor = ranks[:robot] + (ranks[robot] + 1,) + ranks[robot + 1 :]
                if successor not in seen:
                    seen.add(successor)
                    heapq.heappush(frontier, (-joint(successor), successor))

    graphs = []
    for ranks in rank_tuples:
        assignment = tuple(order[r] for order, r in zip(ranked, ranks))
        graphs.append(_candidate_graph(hyps, measured, assignment))
    return graphs
