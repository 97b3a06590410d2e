"""Summary and metrics documents written next to simulation outputs."""
from __future__ import annotations

from pydantic import BaseModel, Field


class SummaryReport(BaseModel):
    """Aggregate metrics across trials; standard deviations are population values."""

    trials: int = Field(ge=1)
    rmse_mean: float = Field(ge=0)
    rmse_std: float = Field(ge=0)
    rmse_over_diagonal: float = Field(ge=0, description="Mean RMSE divided by the workspace diagonal")
    solve_time_mean_ms: float = Field(ge=0)
    solve_time_std_ms: float = Field(ge=0)
    solve_time_median_ms: float = Field(ge=0)
    solves: int = Field(ge=0)
    observability_failure_rate: float = Field(ge=0, le=1)
    cpu_utilisation: float = Field(ge=0)
    baseline_rmse_mean: float | None = None
    rmse_ratio: float | None = None


class TrialMetrics(BaseModel):
    trial: int
    rmse: float
    rmse_per_robot: list[float]
    solves: int
    wall_time_s: float
    cpu_utilisation: float
    network_assumptions_passed: bool | None = None
    trajectory_digest: str


class MetricsDocument(BaseModel):
    """Content of `metrics.json`."""

    estimator: str
    summary: SummaryReport
    trials: list[TrialMetrics]
    scenario: dict


class BenchRow(BaseModel):
    shadowing_sigma_db: float
    rmse_mean: float
    baseline_rmse_mean: float
    rmse_ratio: float | None
    solve_time_median_ms: float
