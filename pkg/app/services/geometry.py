"""Planar pose algebra shared by every localization module."""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Map an angle onto the half-open interval (-pi, pi]."""

    if not math.isfinite(theta):
        raise InvalidArgumentError(f"Angle must be finite, received {theta!r}")
    if -math.pi < theta <= math.pi:
        return float(theta)
    wrapped = math.pi - (math.pi - theta) % TWO_PI
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    """Vectorized `wrap_angle`; values already inside the interval are returned untouched."""

    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise InvalidArgumentError("Angles must be finite")
    wrapped = math.pi - np.mod(math.pi - theta, TWO_PI)
    wrapped = np.where(wrapped <= -math.pi, wrapped + TWO_PI, wrapped)
    inside = (theta > -math.pi) & (theta <= math.pi)
    return np.where(inside, theta, wrapped)


@dataclass(slots=True, frozen=True)
class Pose2D:
    """Planar pose: position in meters, heading in radians."""

    x: float
    y: float
    phi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidArgumentError(f"Pose position must be finite, received ({self.x}, {self.y})")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))

    @classmethod
    def identity(cls) -> Pose2D:
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, values: Sequence[float] | np.ndarray) -> Pose2D:
        x, y, phi = (float(v) for v in values)
        return cls(x, y, phi)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.phi], dtype=float)

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


def se2_compose(a: Pose2D, b: Pose2D) -> Pose2D:
    """Rigid-body composition a ⊕ b (b expressed in the frame of a)."""

    c, s = math.cos(a.phi), math.sin(a.phi)
    return Pose2D(
        a.x + c * b.x - s * b.y,
        a.y + s * b.x + c * b.y,
        a.phi + b.phi,
    )


def se2_inverse(a: Pose2D) -> Pose2D:
    c, s = math.cos(a.phi), math.sin(a.phi)
    return Pose2D(-c * a.x - s * a.y, s * a.x - c * a.y, -a.phi)


def se2_between(a: Pose2D, b: Pose2D) -> Pose2D:
    """Pose of b expressed in the frame of a, so that a ⊕ between(a, b) = b."""

    c, s = math.cos(a.phi), math.sin(a.phi)
    dx, dy = b.x - a.x, b.y - a.y
    return Pose2D(c * dx + s * dy, -s * dx + c * dy, b.phi - a.phi)


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def circular_mean(angles: Sequence[float] | np.ndarray, weights: Sequence[float] | np.ndarray | None = None) -> float:
    """Weighted mean direction of a set of headings."""

    values = np.asarray(angles, dtype=float)
    if values.size == 0:
        raise InvalidArgumentError("circular_mean requires at least one angle")
    w = np.ones_like(values) if weights is None else np.asarray(weights, dtype=float)
    if np.all(values == values[0]):
        return wrap_angle(float(values[0]))
    return wrap_angle(math.atan2(float(np.dot(w, np.sin(values))), float(np.dot(w, np.cos(values)))))
