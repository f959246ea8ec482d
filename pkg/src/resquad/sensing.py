"""Compliant-arm Hall sensing and collision characterization.

Each of the four cage arms rides on a spring-damper sled; a Hall sensor
reports the normalized compression d_i in [0, 1]. Projecting every arm's
compression onto its azimuth and summing the planar components gives a
collision intensity and direction; a confirmation counter turns the
per-tick estimates into a single latched detection event.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

ARM_COUNT = 4


@dataclass(frozen=True)
class ArmModel:
    """Spring-damper constants of one compliant arm.

    stiffness (N/m) and max_compression (m) fix the full-scale axial
    force; damping (N s/m) shapes the reaction force only, never the
    quasi-static compression itself.
    """

    stiffness: float = 10_000.0
    damping: float = 60.0
    max_compression: float = 0.03

    def __post_init__(self):
        if not self.stiffness > 0:
            raise ValueError("stiffness must be positive")
        if self.damping < 0:
            raise ValueError("damping must be nonnegative")
        if not self.max_compression > 0:
            raise ValueError("max_compression must be positive")


def compress(arm: ArmModel, axial_force: float) -> float:
    """Quasi-static compression under an axial (inward) force.

    Tension does not extend the sled, so the result is clamped to
    [0, max_compression].
    """
    delta = axial_force / arm.stiffness
    if delta < 0.0:
        return 0.0
    if delta > arm.max_compression:
        return arm.max_compression
    return delta


def reaction_force(arm: ArmModel, compression: float,
                   compression_rate: float = 0.0) -> float:
    """Force the sled pushes back with at a given compression and rate."""
    return arm.stiffness * compression + arm.damping * compression_rate


def hall_reading(compression: float, arm: ArmModel) -> float:
    """Normalized sensor output in [0, 1], linear in compression."""
    d = compression / arm.max_compression
    if d < 0.0:
        return 0.0
    if d > 1.0:
        return 1.0
    return d


@dataclass(frozen=True)
class ArmReading:
    """One synchronized sample of all four normalized compressions."""

    d: tuple[float, float, float, float]
    t: float

    def __post_init__(self):
        if len(self.d) != ARM_COUNT:
            raise ValueError("expected four arm values")
        for value in self.d:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"reading {value} outside [0, 1]")


def characterize(d, azimuths) -> tuple[float, float]:
    """Collision intensity and body-frame direction from arm compressions.

    Each compression is projected onto its arm azimuth in the body x-y
    plane; the planar components are summed and returned as polar
    (intensity, direction). Direction follows atan2 into (-pi, pi], with
    the all-zero case reported as direction 0. A reading on exactly one
    arm returns that arm's azimuth with no rounding.

    Args:
        d: four normalized compressions in [0, 1].
        azimuths: matching arm azimuths, radians in the body frame.
    """
    if len(d) != ARM_COUNT or len(azimuths) != ARM_COUNT:
        raise ValueError("expected four compressions and four azimuths")
    active = [i for i in range(ARM_COUNT) if d[i] != 0.0]
    if not active:
        return 0.0, 0.0
    if len(active) == 1:
        i = active[0]
        return float(d[i]), float(azimuths[i])
    sum_x = 0.0
    sum_y = 0.0
    for i in range(ARM_COUNT):
        sum_x += d[i] * math.cos(azimuths[i])
        sum_y += d[i] * math.sin(azimuths[i])
    intensity = math.sqrt(sum_x * sum_x + sum_y * sum_y)
    if sum_x == 0.0 and sum_y == 0.0:
        return 0.0, 0.0
    return intensity, math.atan2(sum_y, sum_x)


@dataclass(frozen=True)
class DetectorConfig:
    """Threshold and confirmation window of the collision detector."""

    threshold: float = 0.1
    confirm_ticks: int = 10

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")
        if self.confirm_ticks < 1:
            raise ValueError("confirm_ticks must be at least 1")


@dataclass(frozen=True)
class DetectionEvent:
    """Latched collision report: peak intensity, its direction, fire time."""

    intensity: float
    direction: float
    t_detect: float


@dataclass
class Detector:
    """Peak-hold collision detector fed once per sensor tick.

    Idle until the intensity exceeds the threshold, then tracks the
    running maximum; every strictly larger sample restarts the
    confirmation counter, and the event fires confirm_ticks samples
    after the last new maximum, reporting that maximum. The detector
    latches after firing until reset().
    """

    config: DetectorConfig = field(default_factory=DetectorConfig)
    tracking: bool = False
    fired: bool = False
    peak_intensity: float = 0.0
    peak_direction: float = 0.0
    ticks_since_peak: int = 0
    event: DetectionEvent | None = None

    def update(self, intensity: float, direction: float,
               t: float) -> DetectionEvent | None:
        """Feed one sample; returns the event on the tick it fires."""
        if self.fired:
            return None
        if not self.tracking:
            if intensity > self.config.threshold:
                self.tracking = True
                self.peak_intensity = intensity
                self.peak_direction = direction
                self.ticks_since_peak = 0
            return None
        if intensity > self.peak_intensity:
            self.peak_intensity = intensity
            self.peak_direction = direction
            self.ticks_since_peak = 0
            return None
        self.ticks_since_peak += 1
        if self.ticks_since_peak >= self.config.confirm_ticks:
            self.fired = True
            self.event = DetectionEvent(self.peak_intensity,
                                        self.peak_direction, t)
            return self.event
        return None

    def reset(self) -> None:
        self.tracking = False
        self.fired = False
        self.peak_intensity = 0.0
        self.peak_direction = 0.0
        self.ticks_since_peak = 0
        self.event = None
