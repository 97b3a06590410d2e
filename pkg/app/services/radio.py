"""Log-distance path-loss model: RSSI synthesis, RSSI-to-range inversion and calibration."""
from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from app.schemas.scenario import PathLossParams

from .exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)

LN10 = math.log(10.0)


@dataclass(slots=True, frozen=True)
class RangeMeasurement:
    """Directed RSSI observation of `from_id` taken at `to_id`, with its derived range."""

    from_id: int
    to_id: int
    rssi_dbm: float
    distance_m: float
    timestamp: int

    def __post_init__(self) -> None:
        if self.from_id == self.to_id:
            raise InvalidArgumentError(f"Measurement endpoints must differ, both are {self.from_id}")
        if not (math.isfinite(self.distance_m) and self.distance_m > 0.0):
            raise InvalidArgumentError(f"Measured distance must be positive and finite, got {self.distance_m}")

    @property
    def pair(self) -> tuple[int, int]:
        return (min(self.from_id, self.to_id), max(self.from_id, self.to_id))

    def peer_of(self, robot_id: int) -> int | None:
        if robot_id == self.from_id:
            return self.to_id
        if robot_id == self.to_id:
            return self.from_id
        return None


def rssi_from_distance(d: float, params: PathLossParams, rng: np.random.Generator | None = None) -> float:
    """Synthesize an RSSI reading (dBm) for a true distance `d` in meters."""

    if not (math.isfinite(d) and d > 0.0):
        raise InvalidArgumentError(f"Distance must be positive, got {d}")
    rssi = params.ref_rssi_dbm - 10.0 * params.exponent * math.log10(d)
    if params.shadowing_sigma_db > 0.0:
        if rng is None:
            raise InvalidArgumentError("A random generator is required when shadowing is enabled")
        rssi += float(rng.normal(0.0, params.shadowing_sigma_db))
    return rssi


def distance_from_rssi(rssi: float, params: PathLossParams) -> float:
    """Invert the path-loss model: d = 10^((A - RSSI) / (10 n))."""

    if not math.isfinite(rssi):
        raise InvalidArgumentError(f"RSSI must be finite, got {rssi}")
    return 10.0 ** ((params.ref_rssi_dbm - rssi) / (10.0 * params.exponent))


def measure(
    from_id: int,
    to_id: int,
    true_distance: float,
    params: PathLossParams,
    rng: np.random.Generator | None,
    timestamp: int,
) -> RangeMeasurement:
    rssi = rssi_from_distance(true_distance, params, rng)
    return RangeMeasurement(
        from_id=from_id,
        to_id=to_id,
        rssi_dbm=rssi,
        distance_m=distance_from_rssi(rssi, params),
        timestamp=timestamp,
    )


def symmetrize(measurements: Iterable[RangeMeasurement]) -> list[RangeMeasurement]:
    """Merge directed measurements into one undirected measurement per robot pair.

    The distance is the mean of the directed estimates that exist; output pairs are ordered
    with `from_id < to_id` and sorted lexicographically.
    """

    grouped: dict[tuple[int, int], list[RangeMeasurement]] = {}
    for measurement in measurements:
        grouped.setdefault(measurement.pair, []).append(measurement)

    merged: list[RangeMeasurement] = []
    for (i, j), group in sorted(grouped.items()):
        merged.append(
            RangeMeasurement(
                from_id=i,
                to_id=j,
                rssi_dbm=sum(m.rssi_dbm for m in group) / len(group),
                distance_m=sum(m.distance_m for m in group) / len(group),
                timestamp=max(m.timestamp for m in group),
            )
        )
    return merged


def range_sigma(distance: float, params: PathLossParams, floor: float) -> float:
    """Range standard deviation implied by shadowing noise, never below `floor`."""

    propagated = distance * LN10 * params.shadowing_sigma_db / (10.0 * params.exponent)
    return max(floor, propagated)


def fit_path_loss(distances: Sequence[float], rssi: Sequence[float], shadowing_sigma_db: float | None = None) -> PathLossParams:
    """Least-squares calibration of reference RSSI and exponent from (distance, RSSI) pairs."""

    d = np.asarray(distances, dtype=float)
    r = np.asarray(rssi, dtype=float)
    if d.shape != r.shape or d.ndim != 1:
        raise InvalidArgumentError("distances and rssi must be one-dimensional and equally long")
    if np.any(d <= 0.0) or not np.all(np.isfinite(d)) or not np.all(np.isfinite(r)):
        raise InvalidArgumentError("distances must be positive and all samples finite")
    if np.unique(d).size < 2:
        raise InvalidArgumentError("At least two distinct distances are required to fit the exponent")

    design = np.column_stack([np.ones_like(d), -10.0 * np.log10(d)])
    (ref_rssi, exponent), *_ = np.linalg.lstsq(design, r, rcond=None)
    clipped = float(np.clip(exponent, 2.0, 6.0))
    if clipped != exponent:
        logger.warning("Fitted path-loss exponent %.3f clipped to %.1f", exponent, clipped)
    if shadowing_sigma_db is None:
        residuals = r - (ref_rssi - 10.0 * clipped * np.log10(d))
        shadowing_sigma_db = float(np.std(residuals))
    return PathLossParams(
        ref_rssi_dbm=float(ref_rssi),
        exponent=clipped,
        shadowing_sigma_db=shadowing_sigma_db,
    )
