"""Validated configuration models for scenarios, radio, solver and network settings."""
from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class PathLossParams(_FrozenModel):
    """Log-distance path-loss model parameters."""

    ref_rssi_dbm: float = Field(default=-40.0, description="RSSI at the 1 m reference distance")
    exponent: float = Field(default=2.0, ge=2.0, le=6.0, description="Propagation exponent")
    shadowing_sigma_db: float = Field(default=2.0, ge=0.0, description="Shadowing std-dev in dB")


class LMConfig(_FrozenModel):
    """Levenberg-Marquardt damping schedule and termination tolerances."""

    lambda0: float = Field(default=1e-4, gt=0.0)
    lambda_up: float = Field(default=10.0, gt=1.0)
    lambda_down: float = Field(default=0.5, gt=0.0, lt=1.0)
    max_iters: int = Field(default=50, ge=1)
    abs_tol: float = Field(default=1e-9, ge=0.0)
    rel_tol: float = Field(default=1e-6, ge=0.0)


class ConstraintSet(_FrozenModel):
    """Ball constraint and regularized Lagrangian parameters."""

    ball_radius: float = Field(gt=0.0)
    gamma: float = Field(default=1.0, gt=0.0)
    lambda_dual: float = Field(default=0.0, ge=0.0)
    dual_step: float = Field(default=0.1, gt=0.0)


class AreaConfig(_FrozenModel):
    width: float = Field(default=60.0, gt=0.0)
    height: float = Field(default=60.0, gt=0.0)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)


class MotionNoiseConfig(_FrozenModel):
    sigma_x: float = Field(default=0.1, ge=0.0)
    sigma_y: float = Field(default=0.1, ge=0.0)
    sigma_phi_deg: float = Field(default=0.5, ge=0.0)


class LimitsConfig(_FrozenModel):
    v_min: float = Field(default=0.3, ge=0.0)
    v_max: float = Field(default=1.0, gt=0.0)
    omega_max: float = Field(default=0.5, gt=0.0)

    @model_validator(mode="after")
    def _ordered(self) -> LimitsConfig:
        if self.v_min > self.v_max:
            raise ValueError("v_min must not exceed v_max")
        return self


class ConstraintConfig(_FrozenModel):
    ball_radius: float | None = Field(default=None, gt=0.0)
    gamma: float = Field(default=1.0, gt=0.0)
    dual_step: float = Field(default=0.1, gt=0.0)


class NetworkConfig(_FrozenModel):
    xi: float = Field(default=0.05, gt=0.0)
    window: int = Field(default=1, ge=1, description="Connectivity window T")
    drop_probability: float = Field(default=0.0, ge=0.0, lt=1.0)


class ScenarioConfig(_FrozenModel):
    """Full description of a simulated experiment."""

    schema_version: Literal[1] = 1
    n_robots: int = Field(default=5, ge=2)
    area: AreaConfig = Field(default_factory=AreaConfig)
    iterations: int = Field(default=100, ge=1)
    trials: int = Field(default=10, ge=1)
    seed: int = Field(default=0, ge=0)
    k: int = Field(default=2, ge=1)
    cap: int = Field(default=32, ge=1)
    samples_per_candidate: int = Field(default=3, ge=1)
    sigma_r: float = Field(default=1.0, gt=0.0)
    range_sigma_model: Literal["path_loss", "fixed"] = "path_loss"
    dt: float = Field(default=1.0, gt=0.0)
    comm_radius: float = Field(default=40.0, gt=0.0)
    min_separation: float = Field(default=5.0, ge=0.0)
    min_connected_robots: int = Field(default=2, ge=2)
    state_dim: int = Field(default=3, ge=1)
    path_loss: PathLossParams = Field(default_factory=PathLossParams)
    motion_noise: MotionNoiseConfig = Field(default_factory=MotionNoiseConfig)
    limits: LimitsConfig = Field(default_factory=LimitsConfig)
    lm: LMConfig = Field(default_factory=LMConfig)
    constraints: ConstraintConfig = Field(default_factory=ConstraintConfig)
    network: NetworkConfig = Field(default_factory=NetworkConfig)

    def constraint_set(self) -> ConstraintSet:
        radius = self.constraints.ball_radius
        if radius is None:
            radius = math.sqrt(self.n_robots - 1) * self.area.diagonal
        return ConstraintSet(
            ball_radius=radius,
            gamma=self.constraints.gamma,
            dual_step=self.constraints.dual_step,
        )
