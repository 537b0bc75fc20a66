"""Exact reference solutions for shapes evolving by V = -H/2.

A sphere of radius R in d dimensions has mean curvature (d-1)/R, so its
radius obeys dR/dt = -(d-1)/(2R), i.e. R(t)^2 = R0^2 - (d-1) t, with
extinction at t = R0^2/(d-1).  Flat interfaces (stripes) are stationary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kernel import C0

__all__ = ["ExtinctionReached", "ReferenceSolution", "reference_radius", "disc_dissipation_rate"]


class ExtinctionReached(ValueError):
    """Requested a reference radius at or past the extinction time."""

    def __init__(self, time: float, extinction_time: float):
        super().__init__(f"shape is extinct at t={time} (extinction at {extinction_time})")
        self.time = time
        self.extinction_time = extinction_time


@dataclass(frozen=True)
class ReferenceSolution:
    kind: str  # "disc", "sphere" or "stripe"
    radius0: float
    dimension: int

    def __post_init__(self):
        if self.kind not in ("disc", "sphere", "stripe"):
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.kind != "stripe" and not 0.0 < self.radius0 < 0.5:
            raise ValueError("reference radius must lie in (0, 0.5)")

    @property
    def extinction_time(self) -> float:
        if self.kind == "stripe":
            return math.inf
        return self.radius0**2 / (self.dimension - 1)

    def radius(self, t: float) -> float:
        if self.kind == "stripe":
            return self.radius0
        if t >= self.extinction_time:
            raise ExtinctionReached(t, self.extinction_time)
        return math.sqrt(self.radius0**2 - (self.dimension - 1) * t)

    def is_extinct(self, t: float) -> bool:
        return t >= self.extinction_time


def reference_radius(kind: str, radius0: float, t: float, d: int) -> float:
    """R(t) = sqrt(R0^2 - (d-1) t); raises ExtinctionReached past extinction."""
    return ReferenceSolution(kind, radius0, d).radius(t)


def disc_dissipation_rate(radius: float) -> float:
    """c0 * perimeter * V^2 for a circle moving by V = -1/(2R): c0 pi / (2R)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return C0 * math.pi / (2.0 * radius)
