"""Relative position measurement graphs, their matrices and the observability test."""
from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from networkx.utils import UnionFind

from .exceptions import InvalidArgumentError
from .geometry import Pose2D
from .motion import Control
from .radio import RangeMeasurement, symmetrize

logger = logging.getLogger(__name__)

RELATIVE_VELOCITY_EPS = 1e-6
RANK_TOLERANCE_FLOOR = 1e-9

Edge = tuple[int, int, float]


@dataclass(slots=True, frozen=True)
class RelGraph:
    """Weighted undirected graph on nodes 0..n-1; edges sorted with i < j."""

    n: int
    edges: tuple[Edge, ...] = ()

    def __post_init__(self) -> None:
        if self.n < 0:
            raise InvalidArgumentError(f"Node count must be non-negative, got {self.n}")
        normalized: dict[tuple[int, int], float] = {}
        for i, j, w in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise InvalidArgumentError(f"Self-loop on node {i} is not allowed")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise InvalidArgumentError(f"Edge ({i}, {j}) references a node outside 0..{self.n - 1}")
            if not (math.isfinite(w) and w > 0.0):
                raise InvalidArgumentError(f"Edge ({i}, {j}) weight must be positive, got {w}")
            key = (min(i, j), max(i, j))
            if key in normalized:
                raise InvalidArgumentError(f"Duplicate edge {key}")
            normalized[key] = float(w)
        object.__setattr__(self, "edges", tuple((i, j, w) for (i, j), w in sorted(normalized.items())))

    @classmethod
    def empty(cls, n: int) -> RelGraph:
        return cls(n, ())

    @property
    def adjacency(self) -> np.ndarray:
        matrix = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            matrix[i, j] = matrix[j, i] = w
        return matrix


@dataclass(slots=True, frozen=True)
class ObservabilityReport:
    spectral_rank: int
    threshold: int
    observable: bool
    component_count: int


def _latest_per_direction(measurements: Iterable[RangeMeasurement]) -> list[RangeMeasurement]:
    latest: dict[tuple[int, int], RangeMeasurement] = {}
    for measurement in measurements:
        key = (measurement.from_id, measurement.to_id)
        previous = latest.get(key)
        if previous is not None:
            if previous.timestamp == measurement.timestamp:
                logger.warning(
                    "Duplicate measurement %s->%s at t=%s; keeping the latest",
                    key[0],
                    key[1],
                    measurement.timestamp,
                )
            elif previous.timestamp > measurement.timestamp:
                continue
        latest[key] = measurement
    return list(latest.values())


def build_rpmg(measurements: Sequence[RangeMeasurement], n: int, comm_radius: float) -> RelGraph:
    """Assemble the range graph: one edge per symmetrized pair within `comm_radius`."""

    for measurement in measurements:
        if max(measurement.from_id, measurement.to_id) >= n or min(measurement.from_id, measurement.to_id) < 0:
            raise InvalidArgumentError(
                f"Measurement {measurement.from_id}->{measurement.to_id} references a robot outside 0..{n - 1}"
            )
    merged = symmetrize(_latest_per_direction(measurements))
    edges = [(m.from_id, m.to_id, m.distance_m) for m in merged if m.distance_m <= comm_radius]
    return RelGraph(n, tuple(edges))


def _world_velocity(u: Control, state: Pose2D) -> np.ndarray:
    return u.v * np.array([math.cos(state.phi), math.sin(state.phi)])


def form_erpmg(rpmg: RelGraph, controls: Sequence[Control], states: Sequence[Pose2D]) -> RelGraph:
    """Keep the edges whose endpoints move relative to each other."""

    if len(controls) != rpmg.n or len(states) != rpmg.n:
        raise InvalidArgumentError("controls and states must be indexed by graph node")
    velocities = [_world_velocity(u, s) for u, s in zip(controls, states)]
    kept: list[Edge] = []
    for i, j, w in rpmg.edges:
        if float(np.linalg.norm(velocities[j] - velocities[i])) > RELATIVE_VELOCITY_EPS:
            kept.append((i, j, w))
        else:
            logger.debug("Dropping edge (%s, %s): no relative motion", i, j)
    return RelGraph(rpmg.n, tuple(kept))


def incidence_matrix(g: RelGraph, oriented: bool = False) -> np.ndarray:
    """Edge-by-node incidence; rows follow the lexicographic edge order.

    With `oriented=True` the lower endpoint carries +1 and the higher endpoint -1.
    """

    matrix = np.zeros((len(g.edges), g.n))
    tail = -1.0 if oriented else 1.0
    for row, (i, j, _) in enumerate(g.edges):
        matrix[row, i] = 1.0
        matrix[row, j] = tail
    return matrix


def numerical_rank(matrix: np.ndarray) -> int:
    if matrix.size == 0:
        return 0
    singular = np.linalg.svd(matrix, compute_uv=False)
    tolerance = max(max(matrix.shape) * float(singular[0]) * 1e-12, RANK_TOLERANCE_FLOOR)
    return int(np.count_nonzero(singular > tolerance))


def graph_rank(g: RelGraph) -> int:
    return numerical_rank(incidence_matrix(g, oriented=True))


def component_count(g: RelGraph) -> int:
    forest = UnionFind(range(g.n))
    for i, j, _ in g.edges:
        forest.union(i, j)
    return sum(1 for _ in forest.to_sets())


def laplacian(g: RelGraph) -> np.ndarray:
    adjacency = g.adjacency
    return np.diag(adjacency.sum(axis=1)) - adjacency


def observability_matrix(g: RelGraph, state_dim: int) -> np.ndarray:
    """C = Ā^T W Ā with Ā = A ⊗ I_d and W holding one w·I_d block per edge."""

    identity = np.eye(state_dim)
    lifted = np.kron(incidence_matrix(g, oriented=True), identity)
    weights = np.kron(np.diag([w for _, _, w in g.edges]), identity)
    return lifted.T @ weights @ lifted


def observability_check(erpmg: RelGraph, state_dim: int) -> ObservabilityReport:
    if state_dim < 1:
        raise InvalidArgumentError(f"state_dim must be at least 1, got {state_dim}")
    threshold = state_dim * max(erpmg.n - 1, 0)
    components = component_count(erpmg)
    if erpmg.n < 2:
        return ObservabilityReport(spectral_rank=0, threshold=threshold, observable=False, component_count=components)
    rank = numerical_rank(observability_matrix(erpmg, state_dim))
    return ObservabilityReport(
        spectral_rank=rank,
        threshold=threshold,
        observable=rank == threshold,
        component_count=components,
    )
