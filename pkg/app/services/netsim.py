"""Time-varying communication network: weight matrices, message exchange and assumption checks."""
from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from app.schemas.network import AssumptionReportRead, NetworkTraceRecord

from .exceptions import InvalidArgumentError
from .geometry import Pose2D
from .motion import Control
from .radio import RangeMeasurement

logger = logging.getLogger(__name__)

STOCHASTIC_TOLERANCE = 1e-9


@dataclass(slots=True, frozen=True, eq=False)
class NetworkSnapshot:
    """Edge set E(t), self-edges included, and its weight matrix A(t)."""

    edges: frozenset[tuple[int, int]]
    weights: np.ndarray

    @property
    def links(self) -> list[tuple[int, int]]:
        return sorted((i, j) for i, j in self.edges if i < j)


@dataclass(slots=True)
class TimeVaryingNetwork:
    n: int
    schedule: list[NetworkSnapshot] = field(default_factory=list)

    def append(self, edges: Iterable[tuple[int, int]], weights: np.ndarray) -> None:
        self.schedule.append(_snapshot(self.n, edges, weights))

    def at(self, t: int) -> NetworkSnapshot:
        if not 0 <= t < len(self.schedule):
            raise InvalidArgumentError(f"Iteration {t} is outside the schedule of length {len(self.schedule)}")
        return self.schedule[t]

    def __len__(self) -> int:
        return len(self.schedule)


@dataclass(slots=True, frozen=True)
class AssumptionReport:
    doubly_stochastic: bool
    xi_bound: bool
    t_connected: bool
    failing_iterations: tuple[int, ...] = ()
    failing_windows: tuple[tuple[int, int], ...] = ()

    @property
    def passed(self) -> bool:
        return self.doubly_stochastic and self.xi_bound and self.t_connected


@dataclass(slots=True, frozen=True, eq=False)
class MessageBundle:
    """What a robot broadcasts once per iteration."""

    sender: int
    pose: Pose2D
    covariance: np.ndarray
    control: Control
    rssi_samples: tuple[RangeMeasurement, ...]
    timestamp: int


def _snapshot(n: int, edges: Iterable[tuple[int, int]], weights: np.ndarray) -> NetworkSnapshot:
    matrix = np.asarray(weights, dtype=float)
    if matrix.shape != (n, n):
        raise InvalidArgumentError(f"Weight matrix must be {n}x{n}, got {matrix.shape}")
    if np.any(matrix < 0.0) or not np.all(np.isfinite(matrix)):
        raise InvalidArgumentError("Weight matrix entries must be finite and non-negative")
    edge_set = {(min(i, j), max(i, j)) for i, j in edges}
    edge_set |= {(i, i) for i in range(n)}
    for i, j in edge_set:
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidArgumentError(f"Edge ({i}, {j}) references a robot outside 0..{n - 1}")
    return NetworkSnapshot(frozenset(edge_set), matrix)


def metropolis_weights(edges: Iterable[tuple[int, int]], n: int) -> np.ndarray:
    """Symmetric doubly stochastic weights a_ij = 1 / (1 + max(deg_i, deg_j))."""

    links = sorted({(min(i, j), max(i, j)) for i, j in edges if i != j})
    degree = np.zeros(n, dtype=int)
    for i, j in links:
        degree[i] += 1
        degree[j] += 1
    weights = np.zeros((n, n))
    for i, j in links:
        weights[i, j] = weights[j, i] = 1.0 / (1.0 + max(degree[i], degree[j]))
    np.fill_diagonal(weights, 1.0 - weights.sum(axis=1))
    return weights


def snapshot_from_positions(positions: np.ndarray, comm_radius: float) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Links between every pair closer than `comm_radius`, with Metropolis weights."""

    points = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = points.shape[0]
    links = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if math.hypot(points[i, 0] - points[j, 0], points[i, 1] - points[j, 1]) <= comm_radius
    ]
    return links, metropolis_weights(links, n)


def validate_assumptions(net: TimeVaryingNetwork, xi: float, T: int, horizon: int | None = None) -> AssumptionReport:
    """Check double stochasticity, the xi lower bound and T-window connectivity over `horizon`."""

    if not xi > 0.0:
        raise InvalidArgumentError(f"xi must be positive, got {xi}")
    if T < 1:
        raise InvalidArgumentError(f"T must be at least 1, got {T}")
    horizon = len(net) if horizon is None else min(horizon, len(net))

    doubly_stochastic = True
    xi_bound = True
    failing: list[int] = []
    for t in range(horizon):
        weights = net.at(t).weights
        stochastic = bool(
            np.all(np.abs(weights.sum(axis=1) - 1.0) <= STOCHASTIC_TOLERANCE)
            and np.all(np.abs(weights.sum(axis=0) - 1.0) <= STOCHASTIC_TOLERANCE)
        )
        positive = weights[weights > 0.0]
        bounded = bool(np.all(np.diag(weights) >= xi) and np.all(positive >= xi))
        doubly_stochastic &= stochastic
        xi_bound &= bounded
        if not (stochastic and bounded):
            failing.append(t)

    failing_windows: list[tuple[int, int]] = []
    for start in range(0, horizon, T):
        stop = min(start + T, horizon) - 1
        union = nx.Graph()
        union.add_nodes_from(range(net.n))
        for t in range(start, stop + 1):
            union.add_edges_from(net.at(t).links)
        if net.n == 0 or not nx.is_connected(union):
            failing_windows.append((start, stop))

    if failing or failing_windows:
        logger.info("Network assumptions violated at %s iterations and %s windows", len(failing), len(failing_windows))
    return AssumptionReport(
        doubly_stochastic=doubly_stochastic,
        xi_bound=xi_bound,
        t_connected=not failing_windows,
        failing_iterations=tuple(failing),
        failing_windows=tuple(failing_windows),
    )


def exchange(
    net: TimeVaryingNetwork,
    t: int,
    outboxes: Sequence[MessageBundle],
    drop_probability: float = 0.0,
    rng: np.random.Generator | None = None,
) -> list[list[MessageBundle]]:
    """Deliver bundles along E(t); inbox i lists senders in ascending robot order.

    With a positive `drop_probability` whole undirected links are dropped, so delivery stays
    symmetric. Self-edges are never dropped.
    """

    snapshot = net.at(t)
    if len(outboxes) != net.n:
        raise InvalidArgumentError(f"Expected {net.n} outboxes, got {len(outboxes)}")
    if not 0.0 <= drop_probability < 1.0:
        raise InvalidArgumentError(f"drop_probability must lie in [0, 1), got {drop_probability}")
    if drop_probability > 0.0 and rng is None:
        raise InvalidArgumentError("A random generator is required when links can drop")

    delivered = {(i, i) for i in range(net.n)}
    for i, j in snapshot.links:
        if drop_probability > 0.0 and rng is not None and rng.random() < drop_probability:
            logger.debug("Dropped link (%s, %s) at t=%s", i, j, t)
            continue
        delivered.add((i, j))
        delivered.add((j, i))

    inboxes: list[list[MessageBundle]] = [[] for _ in range(net.n)]
    for receiver, sender in sorted(delivered):
        inboxes[receiver].append(outboxes[sender])
    return inboxes


def trace_records(net: TimeVaryingNetwork) -> list[NetworkTraceRecord]:
    return [
        NetworkTraceRecord(t=t, edges=snapshot.links, weights=snapshot.weights.tolist())
        for t, snapshot in enumerate(net.schedule)
    ]


def network_from_records(records: Sequence[NetworkTraceRecord]) -> TimeVaryingNetwork:
    """Rebuild a network from trace records; iterations must run 0, 1, 2, ... without gaps."""

    ordered = sorted(records, key=lambda record: record.t)
    if not ordered:
        raise InvalidArgumentError("A network trace needs at least one record")
    if [record.t for record in ordered] != list(range(len(ordered))):
        raise InvalidArgumentError("Trace iterations must be contiguous and start at 0")
    network = TimeVaryingNetwork(n=len(ordered[0].weights))
    for record in ordered:
        network.append(record.edges, np.array(record.weights, dtype=float))
    return network


def report_document(report: AssumptionReport) -> AssumptionReportRead:
    return AssumptionReportRead(
        doubly_stochastic=report.doubly_stochastic,
        xi_bound=report.xi_bound,
        t_connected=report.t_connected,
        passed=report.passed,
        failing_iterations=list(report.failing_iterations),
        failing_windows=list(report.failing_windows),
    )
