"""Pose-graph problems over odometry and range factors, solved with Levenberg-Marquardt."""
from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgError

from app.schemas.scenario import ConstraintSet, LMConfig

from .exceptions import InvalidArgumentError
from .geometry import Pose2D, se2_between, wrap_angle, wrap_angles
from .hypothesis import CandidateGraph

logger = logging.getLogger(__name__)

COINCIDENT_EPS = 1e-9
CHI2_FLOOR = 1e-20
DIAG_FLOOR = 1e-9
LAMBDA_MIN = 1e-12
LAMBDA_MAX = 1e16


@dataclass(slots=True, frozen=True, eq=False)
class OdometryFactor:
    """Unary motion prior: pose of `robot` should equal origin ⊕ delta."""

    robot: int
    origin: Pose2D
    delta: Pose2D
    information: np.ndarray


@dataclass(slots=True, frozen=True)
class RangeFactor:
    i: int
    j: int
    distance: float
    information: float


@dataclass(slots=True, frozen=True)
class OdometryInput:
    """Previous estimate, relative motion since then, and the covariance of the motion residual."""

    origin: Pose2D
    delta: Pose2D
    covariance: np.ndarray = field(compare=False)


@dataclass(slots=True, frozen=True, eq=False)
class PoseGraphProblem:
    vertices: tuple[Pose2D, ...]
    odom_factors: tuple[OdometryFactor, ...]
    range_factors: tuple[RangeFactor, ...]
    anchor: int

    def __post_init__(self) -> None:
        n = len(self.vertices)
        if not 0 <= self.anchor < n:
            raise InvalidArgumentError(f"Anchor {self.anchor} is not a vertex of a {n}-vertex problem")
        for factor in self.odom_factors:
            if not 0 <= factor.robot < n:
                raise InvalidArgumentError(f"Odometry factor references missing vertex {factor.robot}")
            info = np.asarray(factor.information, dtype=float)
            if info.shape != (3, 3) or not np.allclose(info, info.T, rtol=0.0, atol=1e-9 * max(1.0, np.abs(info).max())):
                raise InvalidArgumentError(f"Odometry information of vertex {factor.robot} must be a symmetric 3x3 matrix")
            if np.linalg.eigvalsh(info).min() <= 0.0:
                raise InvalidArgumentError(f"Odometry information of vertex {factor.robot} is not positive definite")
        for factor in self.range_factors:
            if not (0 <= factor.i < n and 0 <= factor.j < n) or factor.i == factor.j:
                raise InvalidArgumentError(f"Range factor ({factor.i}, {factor.j}) references invalid vertices")
            if not factor.information > 0.0:
                raise InvalidArgumentError(f"Range information on ({factor.i}, {factor.j}) must be positive")

    @property
    def free_vertices(self) -> list[int]:
        return [v for v in range(len(self.vertices)) if v != self.anchor]


class LMStep(NamedTuple):
    iteration: int
    lam: float
    chi2_before: float
    chi2_after: float | None
    accepted: bool


@dataclass(slots=True, frozen=True, eq=False)
class OptimizedGraph:
    vertices: tuple[Pose2D, ...]
    final_chi2: float
    iterations: int
    converged: bool
    anchor: int
    trace: tuple[LMStep, ...] = ()
    covariances: tuple[np.ndarray, ...] = ()
    source_index: int = 0
    joint_log_weight: float = 0.0
    degenerate_edges: int = 0


class RangeLinearization(NamedTuple):
    residual: float
    jacobian: np.ndarray
    degenerate: bool


def range_residual(pi: Pose2D, pj: Pose2D, d: float) -> RangeLinearization:
    """r = |p_i - p_j| - d with its 1x6 Jacobian over (x_i, y_i, phi_i, x_j, y_j, phi_j)."""

    dx, dy = pi.x - pj.x, pi.y - pj.y
    distance = math.hypot(dx, dy)
    if distance <= COINCIDENT_EPS:
        return RangeLinearization(-d, np.zeros(6), True)
    ux, uy = dx / distance, dy / distance
    return RangeLinearization(distance - d, np.array([ux, uy, 0.0, -ux, -uy, 0.0]), False)


def odometry_residual(origin: Pose2D, x: Pose2D, delta: Pose2D) -> tuple[np.ndarray, np.ndarray]:
    """Residual of pose `x` against origin ⊕ delta, and its 3x3 Jacobian with respect to `x`."""

    c, s = math.cos(origin.phi), math.sin(origin.phi)
    dx, dy = x.x - origin.x, x.y - origin.y
    residual = np.array(
        [
            c * dx + s * dy - delta.x,
            -s * dx + c * dy - delta.y,
            wrap_angle(x.phi - origin.phi - delta.phi),
        ]
    )
    jacobian = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    return residual, jacobian


def _information_from(covariance: np.ndarray, robot: int) -> np.ndarray:
    cov = np.asarray(covariance, dtype=float)
    if cov.shape != (3, 3) or not np.all(np.isfinite(cov)):
        raise InvalidArgumentError(f"Odometry covariance of robot {robot} must be a finite 3x3 matrix")
    try:
        np.linalg.cholesky(cov)
        information = scipy.linalg.inv(cov)
    except (LinAlgError, np.linalg.LinAlgError) as exc:
        raise InvalidArgumentError(f"Odometry covariance of robot {robot} is singular") from exc
    return (information + information.T) / 2.0


def build_problem(
    cg: CandidateGraph,
    odometry: Mapping[int, OdometryInput],
    anchor: int,
    *,
    sigma_r: float = 1.0,
    range_sigmas: Mapping[tuple[int, int], float] | None = None,
    include_anchor_odometry: bool = False,
    float_anchor: bool = False,
) -> PoseGraphProblem:
    """Turn a candidate graph into a pose-graph problem initialized at the candidate poses.

    With `float_anchor` the anchor robot is optimized like the others under its own odometry
    factor, and the gauge is held by a factor-free vertex appended at index n that copies the
    anchor's initial pose.
    """

    n = len(cg.poses)
    if not 0 <= anchor < n:
        raise InvalidArgumentError(f"Anchor {anchor} is not part of the candidate graph")
    if not sigma_r > 0.0:
        raise InvalidArgumentError(f"sigma_r must be positive, got {sigma_r}")

    odom_factors = []
    for robot in sorted(odometry):
        if robot == anchor and not (include_anchor_odometry or float_anchor):
            continue
        if not 0 <= robot < n:
            raise InvalidArgumentError(f"Odometry supplied for unknown robot {robot}")
        entry = odometry[robot]
        odom_factors.append(OdometryFactor(robot, entry.origin, entry.delta, _information_from(entry.covariance, robot)))

    sigmas = range_sigmas or {}
    range_factors = []
    for i, j, distance in cg.measured.edges:
        sigma = sigmas.get((i, j), sigma_r)
        range_factors.append(RangeFactor(i, j, distance, 1.0 / (sigma * sigma)))

    vertices = tuple(cg.poses)
    if float_anchor:
        vertices += (cg.poses[anchor],)
        anchor = n
    return PoseGraphProblem(
        vertices=vertices,
        odom_factors=tuple(odom_factors),
        range_factors=tuple(range_factors),
        anchor=anchor,
    )


class _Assembler:
    """Vectorized residuals and normal equations for one problem."""

    def __init__(self, problem: PoseGraphProblem) -> None:
        self.problem = problem
        self.n = len(problem.vertices)
        free = problem.free_vertices
        self.column = np.full(self.n, -1, dtype=int)
        self.column[free] = np.arange(len(free))
        self.size = 3 * len(free)

        odom = problem.odom_factors
        self.odom_robot = np.array([f.robot for f in odom], dtype=int)
        self.odom_origin = np.array([f.origin.as_array() for f in odom]).reshape(-1, 3)
        self.odom_delta = np.array([f.delta.as_array() for f in odom]).reshape(-1, 3)
        # Whitening: e_w = sqrt_info @ r with sqrt_info^T sqrt_info = information.
        self.odom_sqrt = np.array([np.linalg.cholesky(f.information).T for f in odom]).reshape(-1, 3, 3)
        c, s = np.cos(self.odom_origin[:, 2]), np.sin(self.odom_origin[:, 2])
        jac = np.zeros((len(odom), 3, 3))
        jac[:, 0, 0], jac[:, 0, 1] = c, s
        jac[:, 1, 0], jac[:, 1, 1] = -s, c
        jac[:, 2, 2] = 1.0
        self.odom_jac = np.einsum("mij,mjk->mik", self.odom_sqrt, jac)
        self.odom_hessian = np.einsum("mji,mjk->mik", self.odom_jac, self.odom_jac)

        ranges = problem.range_factors
        self.range_i = np.array([f.i for f in ranges], dtype=int)
        self.range_j = np.array([f.j for f in ranges], dtype=int)
        self.range_d = np.array([f.distance for f in ranges], dtype=float)
        self.range_info = np.array([f.information for f in ranges], dtype=float)

    def odometry_residuals(self, x: np.ndarray) -> np.ndarray:
        pose = x[self.odom_robot]
        dx = pose[:, 0] - self.odom_origin[:, 0]
        dy = pose[:, 1] - self.odom_origin[:, 1]
        c, s = np.cos(self.odom_origin[:, 2]), np.sin(self.odom_origin[:, 2])
        raw = np.column_stack(
            [
                c * dx + s * dy - self.odom_delta[:, 0],
                -s * dx + c * dy - self.odom_delta[:, 1],
                wrap_angles(pose[:, 2] - self.odom_origin[:, 2] - self.odom_delta[:, 2]),
            ]
        )
        return np.einsum("mij,mj->mi", self.odom_sqrt, raw)

    def range_terms(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        diff = x[self.range_i, :2] - x[self.range_j, :2]
        distance = np.hypot(diff[:, 0], diff[:, 1])
        degenerate = distance <= COINCIDENT_EPS
        residual = np.where(degenerate, -self.range_d, distance - self.range_d)
        unit = np.divide(diff, distance[:, None], out=np.zeros_like(diff), where=~degenerate[:, None])
        return residual, unit, degenerate

    def per_vertex_chi2(self, x: np.ndarray) -> np.ndarray:
        shares = np.zeros(self.n)
        if self.odom_robot.size:
            np.add.at(shares, self.odom_robot, np.sum(self.odometry_residuals(x) ** 2, axis=1))
        if self.range_i.size:
            residual, _, _ = self.range_terms(x)
            half = 0.5 * self.range_info * residual**2
            np.add.at(shares, self.range_i, half)
            np.add.at(shares, self.range_j, half)
        return shares

    def chi2(self, x: np.ndarray) -> float:
        total = 0.0
        if self.odom_robot.size:
            total += float(np.sum(self.odometry_residuals(x) ** 2))
        if self.range_i.size:
            residual, _, _ = self.range_terms(x)
            total += float(np.sum(self.range_info * residual**2))
        return total

    def normal_equations(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
        hessian = np.zeros((self.size, self.size))
        gradient = np.zeros(self.size)
        if self.odom_robot.size:
            errors = self.odometry_residuals(x)
            grads = np.einsum("mji,mj->mi", self.odom_jac, errors)
            for k, robot in enumerate(self.odom_robot):
                col = self.column[robot]
                if col < 0:
                    continue
                block = slice(3 * col, 3 * col + 3)
                hessian[block, block] += self.odom_hessian[k]
                gradient[block] += grads[k]
        degenerate_count = 0
        if self.range_i.size:
            residual, unit, degenerate = self.range_terms(x)
            degenerate_count = int(np.count_nonzero(degenerate))
            for k in np.flatnonzero(~degenerate):
                info = self.range_info[k]
                u = unit[k]
                outer = info * np.outer(u, u)
                grad = info * residual[k] * u
                ci, cj = self.column[self.range_i[k]], self.column[self.range_j[k]]
                if ci >= 0:
                    bi = slice(3 * ci, 3 * ci + 2)
                    hessian[bi, bi] += outer
                    gradient[bi] += grad
                if cj >= 0:
                    bj = slice(3 * cj, 3 * cj + 2)
                    hessian[bj, bj] += outer
                    gradient[bj] -= grad
                if ci >= 0 and cj >= 0:
                    hessian[bi, bj] -= outer
                    hessian[bj, bi] -= outer
        return hessian, gradient, degenerate_count


def project_ball(x: np.ndarray, R: float) -> np.ndarray:
    """Radial projection of a stacked vector onto the Euclidean ball of radius R."""

    if not R > 0.0:
        raise InvalidArgumentError(f"Ball radius must be positive, got {R}")
    values = np.asarray(x, dtype=float)
    norm = float(np.linalg.norm(values))
    if norm <= R:
        return values
    return values * (R / norm)


def _as_state(x: Sequence[Pose2D] | np.ndarray) -> np.ndarray:
    if isinstance(x, np.ndarray):
        return np.asarray(x, dtype=float).reshape(-1, 3)
    return np.array([pose.as_array() for pose in x]).reshape(-1, 3)


def _relative_positions(state: np.ndarray, anchor: int) -> np.ndarray:
    free = [v for v in range(state.shape[0]) if v != anchor]
    return (state[free, :2] - state[anchor, :2]).ravel()


def _project_state(state: np.ndarray, anchor: int, radius: float) -> np.ndarray:
    free = [v for v in range(state.shape[0]) if v != anchor]
    if not free:
        return state
    relative = _relative_positions(state, anchor)
    projected = project_ball(relative, radius)
    if projected is relative:
        return state
    out = state.copy()
    out[free, :2] = state[anchor, :2] + projected.reshape(-1, 2)
    return out


def _damped_step(hessian: np.ndarray, gradient: np.ndarray, lam: float) -> np.ndarray | None:
    """Solve (H + lam * diag(H)) delta = -g; None when the system cannot be solved."""

    damping = lam * np.maximum(np.diag(hessian), DIAG_FLOOR)
    try:
        delta = scipy.linalg.solve(hessian + np.diag(damping), -gradient, assume_a="pos")
    except (LinAlgError, ValueError):
        return None
    if not np.all(np.isfinite(delta)):
        return None
    return delta


def _marginals(hessian: np.ndarray, problem: PoseGraphProblem) -> tuple[np.ndarray, ...]:
    try:
        covariance = scipy.linalg.inv(hessian) if hessian.size else hessian
    except (LinAlgError, ValueError):
        logger.debug("Final normal matrix is singular; using its pseudo-inverse")
        covariance = scipy.linalg.pinvh(hessian)
    blocks = []
    column = 0
    for vertex in range(len(problem.vertices)):
        if vertex == problem.anchor:
            blocks.append(np.zeros((3, 3)))
            continue
        block = covariance[3 * column : 3 * column + 3, 3 * column : 3 * column + 3]
        blocks.append((block + block.T) / 2.0)
        column += 1
    return tuple(blocks)


def solve_lm(
    p: PoseGraphProblem,
    cfg: LMConfig | None = None,
    constraints: ConstraintSet | None = None,
    *,
    source_index: int = 0,
    joint_log_weight: float = 0.0,
) -> OptimizedGraph:
    """Marquardt-damped Gauss-Newton over the non-anchor vertices.

    A step is kept only if it lowers chi2 (after the optional ball projection); otherwise the
    previous state is restored and the damping grows.
    """

    cfg = cfg or LMConfig()
    assembler = _Assembler(p)
    state = _as_state(p.vertices)
    chi2 = assembler.chi2(state)
    if not math.isfinite(chi2):
        raise InvalidArgumentError("Initial chi2 is not finite")

    lam = cfg.lambda0
    trace: list[LMStep] = []
    converged = chi2 <= CHI2_FLOOR or assembler.size == 0
    iterations = 0
    degenerate = 0

    while not converged and iterations < cfg.max_iters:
        iterations += 1
        hessian, gradient, degenerate = assembler.normal_equations(state)
        delta = _damped_step(hessian, gradient, lam)
        new_chi2: float | None = None
        accepted = False
        if delta is not None:
            candidate = state.copy()
            candidate[assembler.column >= 0] += delta.reshape(-1, 3)
            candidate[:, 2] = wrap_angles(candidate[:, 2])
            if constraints is not None:
                candidate = _project_state(candidate, p.anchor, constraints.ball_radius)
            new_chi2 = assembler.chi2(candidate)
            accepted = math.isfinite(new_chi2) and new_chi2 < chi2
        trace.append(LMStep(iterations, lam, chi2, new_chi2, accepted))

        if accepted:
            assert new_chi2 is not None
            change = chi2 - new_chi2
            previous = chi2
            state, chi2 = candidate, new_chi2
            lam = max(lam * cfg.lambda_down, LAMBDA_MIN)
            if chi2 <= CHI2_FLOOR or change < cfg.abs_tol or change < cfg.rel_tol * previous:
                converged = True
        else:
            lam *= cfg.lambda_up
            if lam > LAMBDA_MAX:
                logger.debug("Damping saturated at %.3g after %s iterations", lam, iterations)
                break

    hessian, _, degenerate = assembler.normal_equations(state)
    return OptimizedGraph(
        vertices=tuple(Pose2D(*row) for row in state.tolist()),
        final_chi2=chi2,
        iterations=iterations,
        converged=converged,
        anchor=p.anchor,
        trace=tuple(trace),
        covariances=_marginals(hessian, p),
        source_index=source_index,
        joint_log_weight=joint_log_weight,
        degenerate_edges=degenerate,
    )


def constraint_value(x: Sequence[Pose2D] | np.ndarray, problem: PoseGraphProblem, cs: ConstraintSet) -> float:
    """c(x) = |x|^2 - R^2 over the non-anchor positions relative to the anchor."""

    relative = _relative_positions(_as_state(x), problem.anchor)
    return float(relative @ relative) - cs.ball_radius**2


def lagrangian_value(
    x: Sequence[Pose2D] | np.ndarray,
    lambda_dual: float,
    problem: PoseGraphProblem,
    cs: ConstraintSet,
) -> float:
    """Regularized Lagrangian: sum_i f_i(x) + lambda N c(x) - (gamma / 2) N lambda^2."""

    if lambda_dual < 0.0:
        raise InvalidArgumentError(f"Dual variable must be non-negative, got {lambda_dual}")
    state = _as_state(x)
    objective = float(np.sum(_Assembler(problem).per_vertex_chi2(state)))
    count = len(problem.vertices)
    return objective + lambda_dual * count * constraint_value(state, problem, cs) - 0.5 * cs.gamma * count * lambda_dual**2


def dual_update(lambda_dual: float, x: Sequence[Pose2D] | np.ndarray, problem: PoseGraphProblem, cs: ConstraintSet) -> float:
    """Projected gradient ascent on the dual variable."""

    ascent = constraint_value(x, problem, cs) - cs.gamma * lambda_dual
    return max(0.0, lambda_dual + cs.dual_step * ascent)


def select_best(graphs: Sequence[OptimizedGraph]) -> OptimizedGraph:
    """Lowest chi2; ties go to the higher joint log-weight, then to the earlier graph."""

    if not graphs:
        raise InvalidArgumentError("select_best requires at least one optimized graph")
    best = min(range(len(graphs)), key=lambda idx: (graphs[idx].final_chi2, -graphs[idx].joint_log_weight, idx))
    return graphs[best]


def extract_relative_poses(g: OptimizedGraph, reference: int) -> dict[int, Pose2D]:
    if not 0 <= reference < len(g.vertices):
        raise InvalidArgumentError(f"Reference {reference} is not a vertex of the optimized graph")
    origin = g.vertices[reference]
    return {robot: se2_between(origin, pose) for robot, pose in enumerate(g.vertices)}
