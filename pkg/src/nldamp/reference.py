"""Piecewise-quadratic reference trajectories and seeded measurement noise.

A profile is an ordered list of segments, each a polynomial of degree
at most 2 in (t - t_start), so position and velocity are continuous
across joints by construction while acceleration may jump.  Evaluation
is exact (no sampling or interpolation).

Measurement noise is the standard discrete realization of band-limited
white noise: zero-order-hold Gaussian draws refreshed every sample_dt,
one independent PCG64 sub-stream per channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidProfile, OutOfDomain

# Slack for float comparisons against segment boundaries; the simulation
# grid accumulates t in steps of dt and can land an ulp past t_end.
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class Segment:
    """r(t) = c0 + c1*(t - t_start) + c2*(t - t_start)^2 on [t_start, t_end]."""

    t_start: float
    t_end: float
    c0: float
    c1: float
    c2: float

    def eval(self, t: float) -> tuple[float, float, float]:
        dt = t - self.t_start
        r = self.c0 + (self.c1 + self.c2 * dt) * dt
        rdot = self.c1 + 2.0 * self.c2 * dt
        return r, rdot, 2.0 * self.c2


@dataclass(frozen=True)
class RefProfile:
    """Piecewise-quadratic reference with exact (r, rdot, rddot) evaluation."""

    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise InvalidProfile("profile needs at least one segment")
        prev_end = 0.0
        for seg in self.segments:
            if seg.t_end <= seg.t_start:
                raise InvalidProfile(f"empty segment [{seg.t_start}, {seg.t_end}]")
            if abs(seg.t_start - prev_end) > _EDGE_TOL:
                raise InvalidProfile(
                    f"gap or overlap at t={seg.t_start} (previous end {prev_end})"
                )
            prev_end = seg.t_end

    @property
    def t_end(self) -> float:
        return self.segments[-1].t_end

    @property
    def transient_end(self) -> float:
        """End time of the last accelerating segment (0 if rddot = 0 throughout)."""
        tau = 0.0
        for seg in self.segments:
            if seg.c2 != 0.0:
                tau = seg.t_end
        return tau

    def eval(self, t: float) -> tuple[float, float, float]:
        if t < -_EDGE_TOL or t > self.t_end + _EDGE_TOL:
            raise OutOfDomain(f"t={t} outside profile domain [0, {self.t_end}]")
        for seg in self.segments:
            if t <= seg.t_end:
                return seg.eval(t)
        return self.segments[-1].eval(t)


def make_constant(value: float, t_end: float) -> RefProfile:
    """Constant reference r(t) = value (set-point case)."""
    if t_end <= 0:
        raise InvalidProfile("t_end must be positive")
    return RefProfile((Segment(0.0, t_end, value, 0.0, 0.0),))


def make_slope(v: float, t_end: float) -> RefProfile:
    """Linear reference r(t) = v*t."""
    if t_end <= 0:
        raise InvalidProfile("t_end must be positive")
    return RefProfile((Segment(0.0, t_end, 0.0, v, 0.0),))


def make_trapezoid(v_max: float, a: float, t_cruise: float, t_end: float) -> RefProfile:
    """Trapezoidal-velocity motion: quadratic ramp to v_max at rate a,
    linear cruise for t_cruise, quadratic ramp back to rest, constant tail.

    The velocity is continuous everywhere; acceleration jumps at the four
    joints.  Raises InvalidProfile when the ramps and cruise do not fit
    within t_end.
    """
    if a <= 0:
        raise InvalidProfile("acceleration a must be positive")
    if t_cruise < 0:
        raise InvalidProfile("t_cruise must be non-negative")
    if t_end <= 0:
        raise InvalidProfile("t_end must be positive")
    if v_max == 0.0:
        return make_constant(0.0, t_end)

    sgn = 1.0 if v_max > 0 else -1.0
    t_ramp = abs(v_max) / a
    t_motion = 2.0 * t_ramp + t_cruise
    if t_motion > t_end + _EDGE_TOL:
        raise InvalidProfile(
            f"ramps and cruise need {t_motion} s but profile ends at {t_end} s"
        )

    # chain c0/c1 from the previous segment's evaluated end state so the
    # C1 joints are exact in floats (the tail velocity can then sit an
    # ulp away from zero when v_max/a is not exactly representable)
    ramp_up = Segment(0.0, t_ramp, 0.0, 0.0, sgn * 0.5 * a)
    p, v, _ = ramp_up.eval(t_ramp)
    segs = [ramp_up]
    if t_cruise > 0:
        cruise = Segment(t_ramp, t_ramp + t_cruise, p, v, 0.0)
        p, v, _ = cruise.eval(cruise.t_end)
        segs.append(cruise)
    t3 = t_ramp + t_cruise
    ramp_down = Segment(t3, t3 + t_ramp, p, v, -sgn * 0.5 * a)
    p, v, _ = ramp_down.eval(ramp_down.t_end)
    segs.append(ramp_down)
    if t_motion < t_end - _EDGE_TOL:
        segs.append(Segment(t_motion, t_end, p, v, 0.0))
    return RefProfile(tuple(segs))


@dataclass(frozen=True)
class NoiseConfig:
    """Measurement-noise setup: channel standard deviations, the
    zero-order-hold refresh period, and the stream seed."""

    sigma1: float
    sigma2: float
    sample_dt: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("noise sigmas must be non-negative")
        if not (math.isfinite(self.sample_dt) and self.sample_dt > 0):
            raise ValueError("sample_dt must be positive")


class NoiseChannel:
    """Stateful two-channel noise source for one simulation.

    Draws N(0, sigma1^2) and N(0, sigma2^2) from independent PCG64
    sub-streams (numpy SeedSequence spawn) whenever t enters a new
    sample window of width sample_dt, and holds the values in between.
    Identical seeds reproduce identical sequences bit-exactly.  Query
    times must be non-decreasing; a channel must not be shared between
    concurrently running simulations.
    """

    def __init__(self, config: NoiseConfig):
        self.config = config
        child1, child2 = np.random.SeedSequence(config.seed).spawn(2)
        self._gen1 = np.random.Generator(np.random.PCG64(child1))
        self._gen2 = np.random.Generator(np.random.PCG64(child2))
        self._index = -1
        self._held = (0.0, 0.0)

    def measure(self, t: float, x1: float, x2: float) -> tuple[float, float]:
        """Noise-corrupted measurement of the true state at time t."""
        cfg = self.config
        j = int(math.floor(t / cfg.sample_dt + _EDGE_TOL))
        while self._index < j:
            self._held = (
                self._gen1.normal(0.0, cfg.sigma1),
                self._gen2.normal(0.0, cfg.sigma2),
            )
            self._index += 1
        return x1 + self._held[0], x2 + self._held[1]


def noisy_measurement(
    true_x1: float, true_x2: float, t: float, channel: NoiseChannel
) -> tuple[float, float]:
    """Functional alias for NoiseChannel.measure."""
    return channel.measure(t, true_x1, true_x2)
