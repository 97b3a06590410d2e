"""Pose-graph problem and solution documents used by `optimize` and the HTTP surface."""
from __future__ import annotations

import numpy as np
from pydantic import BaseModel, Field, field_validator

from app.services.geometry import Pose2D
from app.services.optimizer import OdometryFactor, OptimizedGraph, PoseGraphProblem, RangeFactor

from .scenario import LMConfig

Vector3 = list[float]
Matrix3 = list[list[float]]


def _check_length(value: list, size: int, name: str) -> list:
    if len(value) != size:
        raise ValueError(f"{name} must have {size} entries")
    return value


class OdometryFactorDocument(BaseModel):
    robot: int = Field(ge=0)
    origin: Vector3
    delta: Vector3
    information: Matrix3

    @field_validator("origin", "delta")
    @classmethod
    def _pose_vector(cls, value: Vector3) -> Vector3:
        return _check_length(value, 3, "pose vector")

    @field_validator("information")
    @classmethod
    def _square(cls, value: Matrix3) -> Matrix3:
        _check_length(value, 3, "information")
        for row in value:
            _check_length(row, 3, "information row")
        return value


class RangeFactorDocument(BaseModel):
    i: int = Field(ge=0)
    j: int = Field(ge=0)
    distance: float = Field(gt=0)
    information: float = Field(gt=0)


class ProblemDocument(BaseModel):
    """Vertices as [x, y, phi], odometry and range factors, and the anchor vertex."""

    vertices: list[Vector3] = Field(min_length=1)
    odometry: list[OdometryFactorDocument] = Field(default_factory=list)
    ranges: list[RangeFactorDocument] = Field(default_factory=list)
    anchor: int = Field(default=0, ge=0)

    @field_validator("vertices")
    @classmethod
    def _vertex_vectors(cls, value: list[Vector3]) -> list[Vector3]:
        for vertex in value:
            _check_length(vertex, 3, "vertex")
        return value

    def to_domain(self) -> PoseGraphProblem:
        return PoseGraphProblem(
            vertices=tuple(Pose2D.from_array(v) for v in self.vertices),
            odom_factors=tuple(
                OdometryFactor(
                    robot=f.robot,
                    origin=Pose2D.from_array(f.origin),
                    delta=Pose2D.from_array(f.delta),
                    information=np.array(f.information, dtype=float),
                )
                for f in self.odometry
            ),
            range_factors=tuple(RangeFactor(f.i, f.j, f.distance, f.information) for f in self.ranges),
            anchor=self.anchor,
        )

    @classmethod
    def from_domain(cls, problem: PoseGraphProblem) -> ProblemDocument:
        return cls(
            vertices=[v.as_array().tolist() for v in problem.vertices],
            odometry=[
                OdometryFactorDocument(
                    robot=f.robot,
                    origin=f.origin.as_array().tolist(),
                    delta=f.delta.as_array().tolist(),
                    information=np.asarray(f.information, dtype=float).tolist(),
                )
                for f in problem.odom_factors
            ],
            ranges=[
                RangeFactorDocument(i=f.i, j=f.j, distance=f.distance, information=f.information)
                for f in problem.range_factors
            ],
            anchor=problem.anchor,
        )


class LMStepRead(BaseModel):
    iteration: int
    lam: float
    chi2_before: float
    chi2_after: float | None
    accepted: bool


class OptimizedDocument(BaseModel):
    vertices: list[Vector3]
    final_chi2: float
    iterations: int
    converged: bool
    anchor: int
    trace: list[LMStepRead] = Field(default_factory=list)
    covariances: list[Matrix3] = Field(default_factory=list)

    @classmethod
    def from_domain(cls, result: OptimizedGraph) -> OptimizedDocument:
        return cls(
            vertices=[v.as_array().tolist() for v in result.vertices],
            final_chi2=result.final_chi2,
            iterations=result.iterations,
            converged=result.converged,
            anchor=result.anchor,
            trace=[LMStepRead(**step._asdict()) for step in result.trace],
            covariances=[np.asarray(c).tolist() for c in result.covariances],
        )


class OptimizeRequest(BaseModel):
    problem: ProblemDocument
    lm: LMConfig | None = None
