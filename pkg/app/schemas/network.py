"""Network trace records (one JSON line per iteration) and validation documents."""
from __future__ import annotations

from pydantic import BaseModel, Field, field_validator


class NetworkTraceRecord(BaseModel):
    t: int = Field(ge=0)
    edges: list[tuple[int, int]] = Field(default_factory=list)
    weights: list[list[float]]

    @field_validator("weights")
    @classmethod
    def _square(cls, value: list[list[float]]) -> list[list[float]]:
        if any(len(row) != len(value) for row in value):
            raise ValueError("weights must be a square matrix")
        return value


class NetworkValidationRequest(BaseModel):
    records: list[NetworkTraceRecord] = Field(min_length=1)
    xi: float = Field(gt=0)
    T: int = Field(ge=1)
    horizon: int | None = Field(default=None, ge=1)


class AssumptionReportRead(BaseModel):
    doubly_stochastic: bool
    xi_bound: bool
    t_connected: bool
    passed: bool
    failing_iterations: list[int] = Field(default_factory=list)
    failing_windows: list[tuple[int, int]] = Field(default_factory=list)
