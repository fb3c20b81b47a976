"""Closed-loop vector fields of the nonlinear damping controller.

Three right-hand sides are provided, all for a double-integrator plant
driven by a commanded acceleration:

* set-point regulation to the origin,
    x1' = x2,   x2' = -k*x1 - |x2|*x2 / (|x1| + mu)
* trajectory tracking in error coordinates e = (x1 - r, x2 - rdot),
    e1' = e2,   e2' = -k*e1 - |e2|*e2 / (|e1| + mu)
* a critically damped PD baseline,
    e1' = e2,   e2' = -kp*e1 - kd*e2

With mu = 0 the damping term is singular on the e1 = 0 axis; evaluating
there with a nonzero rate raises SingularInput instead of returning an
infinity.  All functions are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import SingularInput


class PlantState(NamedTuple):
    """Plant coordinates: position-like x1 (m), velocity-like x2 (m/s)."""

    x1: float
    x2: float


class ErrorState(NamedTuple):
    """Tracking-error coordinates e1 = x1 - r (m), e2 = x2 - rdot (m/s)."""

    e1: float
    e2: float


class Deriv2(NamedTuple):
    """Time derivative of a 2-vector state."""

    d1: float
    d2: float


class Mat2(NamedTuple):
    """Dense 2x2 real matrix in row-major order."""

    a11: float
    a12: float
    a21: float
    a22: float


@dataclass(frozen=True)
class GainParams:
    """Controller parameters: gain k (1/s^2), regularization mu (m),
    optional hard acceleration bound sat (m/s^2)."""

    k: float
    mu: float = 0.0
    sat: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValueError(f"k must be positive and finite, got {self.k}")
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ValueError(f"mu must be non-negative and finite, got {self.mu}")
        if self.sat is not None and not (math.isfinite(self.sat) and self.sat > 0):
            raise ValueError(f"sat must be positive and finite, got {self.sat}")


@dataclass(frozen=True)
class PDGains:
    """Proportional-derivative baseline gains."""

    kp: float
    kd: float

    @classmethod
    def critically_damped(cls, kp: float) -> "PDGains":
        return cls(kp=kp, kd=2.0 * math.sqrt(kp))


def signum(v: float) -> int:
    """Sign of v with the convention signum(0) = 0."""
    if v > 0:
        return 1
    if v < 0:
        return -1
    return 0


def _damping(e1: float, e2: float, mu: float) -> float:
    # |e2|*e2 / (|e1| + mu); the zero-rate case is defined to be 0 even
    # on the singular axis, matching the limit along e2 -> 0.
    if e2 == 0.0:
        return 0.0
    den = abs(e1) + mu
    if den == 0.0:
        raise SingularInput(
            f"damping term undefined at e1=0 with mu=0 and e2={e2}"
        )
    return abs(e2) * e2 / den


def _clamp(v: float, bound: float | None) -> float:
    if bound is None:
        return v
    return max(-bound, min(bound, v))


def rhs_setpoint(s: Sequence[float], p: GainParams) -> Deriv2:
    """Set-point field: regulates the plant state to the origin."""
    x1, x2 = s
    d2 = -p.k * x1 - _damping(x1, x2, p.mu)
    return Deriv2(x2, _clamp(d2, p.sat))


def rhs_tracking(e: Sequence[float], p: GainParams) -> Deriv2:
    """Tracking field on error coordinates (exact while rddot = 0)."""
    e1, e2 = e
    d2 = -p.k * e1 - _damping(e1, e2, p.mu)
    return Deriv2(e2, _clamp(d2, p.sat))


def rhs_pd(e: Sequence[float], kp: float, kd: float) -> Deriv2:
    """Linear PD baseline field on error coordinates."""
    e1, e2 = e
    return Deriv2(e2, -kp * e1 - kd * e2)


def control_accel(e: Sequence[float], p: GainParams) -> float:
    """Unclamped commanded acceleration of the tracking controller.

    Equals the second component of rhs_tracking before any saturation;
    used for logging and saturation diagnostics.
    """
    e1, e2 = e
    return -p.k * e1 - _damping(e1, e2, p.mu)


def jacobian_tracking(e: Sequence[float], p: GainParams) -> Mat2:
    """Jacobian of the tracking field.

        [ 0                                      1                    ]
        [ -k + |e2|*e2*sign(e1)/(|e1|+mu)^2     -2|e2|/(|e1|+mu)      ]

    Raises SingularInput when |e1| + mu = 0 (the analytic form divides
    by that quantity).
    """
    e1, e2 = e
    den = abs(e1) + p.mu
    if den == 0.0:
        raise SingularInput("jacobian undefined at e1=0 with mu=0")
    a21 = -p.k + abs(e2) * e2 * signum(e1) / (den * den)
    a22 = -2.0 * abs(e2) / den
    return Mat2(0.0, 1.0, a21, a22)
