"""Optical proximity-sensor forward model and its exact distance inversion.

The sensor emits infrared light from the fingertip and reads back the summed
phototransistor current.  Current, distance and surface reflectance obey a
power law

    i_all = alpha * (d + d0) ** (-n)

with per-sensor intrinsics ``d0`` (length offset, mm) and ``n`` (decay
exponent).  Everything here is pure and stateless.

Current values are arbitrary, unnormalized sensor units.  The library
defaults ``d0 = 1.0`` mm and ``n = 2.0`` exist only so examples and tests run
without a calibrated sensor at hand; data pipelines must pass measured
intrinsics explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError, DomainError

DEFAULT_D0_MM = 1.0
DEFAULT_DECAY_EXPONENT = 2.0

# Smallest reflectance an estimator output is floored to when it must become
# a valid Reflectance (e.g. before distance inversion in the grasp harness).
ALPHA_FLOOR = 1e-6


def _require_finite(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DataError(f"{what} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class SensorIntrinsics:
    """Fixed per-sensor parameters of the power-law model."""

    d0_mm: float = DEFAULT_D0_MM
    n: float = DEFAULT_DECAY_EXPONENT

    def __post_init__(self) -> None:
        d0 = _require_finite(self.d0_mm, "d0_mm")
        n = _require_finite(self.n, "n")
        if d0 < 0:
            raise DataError(f"d0_mm must be >= 0, got {d0}")
        if n <= 0:
            raise DataError(f"decay exponent n must be > 0, got {n}")
        object.__setattr__(self, "d0_mm", d0)
        object.__setattr__(self, "n", n)


@dataclass(frozen=True)
class Reflectance:
    """Scalar infrared reflectance of one object, in (0, 1]."""

    alpha: float

    def __post_init__(self) -> None:
        alpha = _require_finite(self.alpha, "alpha")
        if not 0.0 < alpha <= 1.0:
            raise DataError(f"alpha must lie in (0, 1], got {alpha}")
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def clamped(cls, value: float, floor: float = ALPHA_FLOOR) -> "Reflectance":
        """Clamp an arbitrary estimate into (0, 1] and wrap it.

        Estimator outputs are clamped to [0, 1]; a zero or negative estimate
        is floored to ``floor`` rather than rejected so distance inversion
        stays defined.
        """
        value = _require_finite(value, "alpha")
        return cls(min(max(value, floor), 1.0))


@dataclass(frozen=True)
class CurrentReading:
    """Summed phototransistor current, arbitrary sensor units (> 0)."""

    i_all: float

    def __post_init__(self) -> None:
        i_all = _require_finite(self.i_all, "i_all")
        if i_all <= 0:
            raise DataError(f"i_all must be > 0, got {i_all}")
        object.__setattr__(self, "i_all", i_all)


def _as_alpha(alpha: "Reflectance | float") -> float:
    if isinstance(alpha, Reflectance):
        return alpha.alpha
    return Reflectance(float(alpha)).alpha


def _as_reading(reading: "CurrentReading | float") -> float:
    if isinstance(reading, CurrentReading):
        return reading.i_all
    return CurrentReading(float(reading)).i_all


def forward_current(
    intrinsics: SensorIntrinsics,
    alpha: "Reflectance | float",
    distance_mm: float,
) -> CurrentReading:
    """Evaluate the forward model ``alpha * (d + d0) ** (-n)``.

    Strictly decreasing in distance, linear in reflectance.  Raises
    DomainError at the d + d0 = 0 singularity and when the power underflows
    to zero (unreachably steep exponents).
    """
    a = _as_alpha(alpha)
    d = _require_finite(distance_mm, "distance_mm")
    if d < 0:
        raise DomainError(f"distance_mm must be >= 0, got {d}")
    base = d + intrinsics.d0_mm
    if base <= 0:
        raise DomainError(
            f"d + d0 must be > 0, got {base} (power-law singularity)"
        )
    i_all = a * base ** (-intrinsics.n)
    if i_all <= 0 or not math.isfinite(i_all):
        raise DomainError(
            f"forward current left the representable range: {i_all!r} "
            f"(d={d}, d0={intrinsics.d0_mm}, n={intrinsics.n})"
        )
    return CurrentReading(i_all)


def invert_distance(
    intrinsics: SensorIntrinsics,
    alpha: "Reflectance | float",
    reading: "CurrentReading | float",
) -> float:
    """Solve the forward model for distance: ``(alpha / i) ** (1/n) - d0``.

    The result may be negative when the assumed reflectance is smaller than
    the true one (reading "closer than contact"); callers decide how to
    interpret that, so no clamping happens here.
    """
    a = _as_alpha(alpha)
    i = _as_reading(reading)
    return (a / i) ** (1.0 / intrinsics.n) - intrinsics.d0_mm
