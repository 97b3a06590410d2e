"""Unicycle kinematics with additive Gaussian disturbance and the random-walk control policy."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from app.schemas.scenario import LimitsConfig, MotionNoiseConfig

from .exceptions import InvalidArgumentError
from .geometry import Pose2D, se2_between, wrap_angle

# Inward turning starts when a wall is closer than this many full-speed steps.
_WALL_MARGIN_STEPS = 3.0


@dataclass(slots=True, frozen=True)
class Control:
    """Forward speed (m/s) and turn rate (rad/s)."""

    v: float
    omega: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.v) and math.isfinite(self.omega)):
            raise InvalidArgumentError(f"Control must be finite, got v={self.v}, omega={self.omega}")


@dataclass(slots=True, frozen=True)
class MotionNoise:
    """Standard deviations of the additive pose disturbance."""

    sigma_x: float
    sigma_y: float
    sigma_phi: float

    def __post_init__(self) -> None:
        if min(self.sigma_x, self.sigma_y, self.sigma_phi) < 0.0:
            raise InvalidArgumentError("Motion noise standard deviations must be non-negative")

    @classmethod
    def zero(cls) -> MotionNoise:
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_config(cls, config: MotionNoiseConfig) -> MotionNoise:
        return cls(config.sigma_x, config.sigma_y, math.radians(config.sigma_phi_deg))

    def covariance(self) -> np.ndarray:
        return np.diag([self.sigma_x**2, self.sigma_y**2, self.sigma_phi**2])


@dataclass(slots=True, frozen=True)
class MotionLimits:
    v_min: float = 0.3
    v_max: float = 1.0
    omega_max: float = 0.5

    @classmethod
    def from_config(cls, config: LimitsConfig) -> MotionLimits:
        return cls(config.v_min, config.v_max, config.omega_max)


@dataclass(slots=True, frozen=True)
class Bounds:
    """Axis-aligned rectangular workspace, closed on every side."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise InvalidArgumentError("Bounds must have positive width and height")

    @classmethod
    def from_size(cls, width: float, height: float) -> Bounds:
        return cls(0.0, 0.0, width, height)

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def clamp(self, pose: Pose2D) -> Pose2D:
        x = min(max(pose.x, self.x_min), self.x_max)
        y = min(max(pose.y, self.y_min), self.y_max)
        if x == pose.x and y == pose.y:
            return pose
        return Pose2D(x, y, pose.phi)

    def distance_ahead(self, pose: Pose2D) -> float:
        """Distance along the current heading until a wall is reached."""

        c, s = math.cos(pose.phi), math.sin(pose.phi)
        limits = []
        if c > 0.0:
            limits.append((self.x_max - pose.x) / c)
        elif c < 0.0:
            limits.append((self.x_min - pose.x) / c)
        if s > 0.0:
            limits.append((self.y_max - pose.y) / s)
        elif s < 0.0:
            limits.append((self.y_min - pose.y) / s)
        return max(0.0, min(limits)) if limits else math.inf


def _check_dt(dt: float) -> None:
    if not dt > 0.0:
        raise InvalidArgumentError(f"Time step must be positive, got {dt}")


def step_ideal(state: Pose2D, u: Control, dt: float) -> Pose2D:
    """Noise-free unicycle update; position advances along the pre-step heading."""

    _check_dt(dt)
    return Pose2D(
        state.x + u.v * dt * math.cos(state.phi),
        state.y + u.v * dt * math.sin(state.phi),
        wrap_angle(state.phi + u.omega * dt),
    )


def step_noisy(state: Pose2D, u: Control, dt: float, noise: MotionNoise, rng: np.random.Generator) -> Pose2D:
    """Ideal update plus independent zero-mean Gaussian noise on x, y and heading."""

    ideal = step_ideal(state, u, dt)
    ex, ey, ephi = rng.normal(0.0, (noise.sigma_x, noise.sigma_y, noise.sigma_phi))
    return Pose2D(ideal.x + ex, ideal.y + ey, wrap_angle(ideal.phi + ephi))


def odometry_delta(u: Control, dt: float) -> Pose2D:
    """Relative motion implied by one control step, expressed in the pre-step frame."""

    origin = Pose2D.identity()
    return se2_between(origin, step_ideal(origin, u, dt))


def random_walk_policy(
    state: Pose2D,
    bounds: Bounds,
    rng: np.random.Generator,
    limits: MotionLimits | None = None,
    dt: float = 1.0,
) -> Control:
    """Sample a random-walk control whose ideal successor stays inside `bounds`.

    Speed and turn rate are drawn uniformly from the limits; near a wall the robot turns
    toward the workspace center and slows down so that the next ideal position is reachable.
    """

    _check_dt(dt)
    limits = limits or MotionLimits()
    v = float(rng.uniform(limits.v_min, limits.v_max))
    omega = float(rng.uniform(-limits.omega_max, limits.omega_max))

    ahead = bounds.distance_ahead(state)
    if ahead < _WALL_MARGIN_STEPS * limits.v_max * dt:
        cx, cy = bounds.center
        inward = wrap_angle(math.atan2(cy - state.y, cx - state.x) - state.phi)
        omega = float(np.clip(inward / dt, -limits.omega_max, limits.omega_max))

    v = min(v, ahead / dt)
    candidate = Control(v, omega)
    successor = step_ideal(state, candidate, dt)
    if not bounds.contains(successor.x, successor.y):
        candidate = Control(0.0, omega)
    return candidate
