"""Deterministic fixed-step RK4 integration of the closed-loop systems.

The plant is a double integrator x1' = x2, x2' = u with u supplied by
one of the three controllers in `model`.  The simulation runs on a
uniform grid t[i] = i*dt and terminates early on convergence (error
norm below conv_eps held for conv_hold seconds), divergence (state norm
above blowup_bound, or non-finite state) or a singular field
evaluation.  Identical inputs, including the noise seed, reproduce the
stored series bit-exactly.

When measurement noise is configured, the controller is fed
noise-corrupted measurements of (x1, x2) while the stored state, error
and energy columns always refer to the clean trajectory.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import SingularInput
from .model import GainParams, PDGains
from .reference import NoiseChannel, NoiseConfig, RefProfile

_EDGE_TOL = 1e-9

#: Column order of the delimited serialization (see csvio).
COLUMNS = ("t", "x1", "x2", "r", "rdot", "e1", "e2", "u", "V", "Vdot")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-4
    t_end: float = 5.0
    conv_eps: float = 1e-6
    conv_hold: float = 0.05
    blowup_bound: float = 1e6

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if not self.dt < self.t_end:
            raise ValueError("t_end must exceed dt")
        if not self.conv_eps > 0:
            raise ValueError("conv_eps must be positive")
        if self.conv_hold < 0:
            raise ValueError("conv_hold must be non-negative")
        if not self.blowup_bound > self.conv_eps:
            raise ValueError("blowup_bound must exceed conv_eps")


class Termination(str, enum.Enum):
    COMPLETED = "completed"
    CONVERGED = "converged"
    DIVERGED = "diverged"
    SINGULAR = "singular"


@dataclass
class TimeSeries:
    """Uniform-step simulation record.

    e1 and e2 store exactly x1 - r and x2 - rdot as recorded; V and
    Vdot store the quadratic energy 0.5*K*e1^2 + 0.5*e2^2 (K the
    proportional gain) and its exact time derivative along the applied
    control, K*e1*e2 + e2*(u - rddot).
    """

    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    r: np.ndarray
    rdot: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    u: np.ndarray
    V: np.ndarray
    Vdot: np.ndarray
    dt: float

    def __len__(self) -> int:
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def error_norm(self) -> np.ndarray:
        return np.hypot(self.e1, self.e2)


@dataclass
class SimOutcome:
    series: TimeSeries
    terminated: Termination
    converged_at: float | None = None


def rk4_step(
    field: Callable[[float, np.ndarray], Sequence[float]],
    t: float,
    s: Sequence[float],
    dt: float,
) -> np.ndarray:
    """One classical 4th-order Runge-Kutta update of a 2-vector state."""
    s = np.asarray(s, dtype=float)
    h2 = 0.5 * dt
    k1 = np.asarray(field(t, s), dtype=float)
    k2 = np.asarray(field(t + h2, s + h2 * k1), dtype=float)
    k3 = np.asarray(field(t + h2, s + h2 * k2), dtype=float)
    k4 = np.asarray(field(t + dt, s + dt * k3), dtype=float)
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _make_control(
    system: str,
    gains: GainParams | PDGains,
    ref: RefProfile | None,
    channel: NoiseChannel | None,
) -> Callable[[float, float, float], float]:
    """Build u(t, x1, x2) for the chosen controller, measurement path included."""

    def measured(t: float, x1: float, x2: float) -> tuple[float, float]:
        if channel is None:
            return x1, x2
        return channel.measure(t, x1, x2)

    if system == "setpoint":
        if not isinstance(gains, GainParams):
            raise TypeError("setpoint system needs GainParams")
        k, mu, sat = gains.k, gains.mu, gains.sat

        def control(t: float, x1: float, x2: float) -> float:
            x1m, x2m = measured(t, x1, x2)
            if x2m == 0.0:
                damp = 0.0
            else:
                den = abs(x1m) + mu
                if den == 0.0:
                    raise SingularInput(f"x1=0 with mu=0 and x2={x2m} at t={t}")
                damp = abs(x2m) * x2m / den
            u = -k * x1m - damp
            if sat is not None:
                u = max(-sat, min(sat, u))
            return u

        return control

    if system == "tracking":
        if not isinstance(gains, GainParams):
            raise TypeError("tracking system needs GainParams")
        if ref is None:
            raise ValueError("tracking system needs a reference profile")
        k, mu, sat = gains.k, gains.mu, gains.sat
        ref_eval = ref.eval

        def control(t: float, x1: float, x2: float) -> float:
            x1m, x2m = measured(t, x1, x2)
            r, rdot, _ = ref_eval(t)
            e1m, e2m = x1m - r, x2m - rdot
            if e2m == 0.0:
                damp = 0.0
            else:
                den = abs(e1m) + mu
                if den == 0.0:
                    raise SingularInput(f"e1=0 with mu=0 and e2={e2m} at t={t}")
                damp = abs(e2m) * e2m / den
            u = -k * e1m - damp
            if sat is not None:
                u = max(-sat, min(sat, u))
            return u

        return control

    if system == "pd":
        if not isinstance(gains, PDGains):
            raise TypeError("pd system needs PDGains")
        kp, kd = gains.kp, gains.kd
        if ref is None:

            def control(t: float, x1: float, x2: float) -> float:
                x1m, x2m = measured(t, x1, x2)
                return -kp * x1m - kd * x2m

        else:
            ref_eval = ref.eval

            def control(t: float, x1: float, x2: float) -> float:
                x1m, x2m = measured(t, x1, x2)
                r, rdot, _ = ref_eval(t)
                return -kp * (x1m - r) - kd * (x2m - rdot)

        return control

    raise ValueError(f"unknown system {system!r}")


def simulate(
    system: str,
    gains: GainParams | PDGains,
    init: Sequence[float],
    ref: RefProfile | None = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    noise: NoiseConfig | None = None,
    stop_early: bool = True,
) -> SimOutcome:
    """Integrate the chosen closed loop from init on the uniform grid.

    system is one of 'setpoint', 'tracking', 'pd'.  For 'setpoint' the
    reference must be omitted (the target is the origin, r = 0).
    Divergence and singular field evaluations are recorded in the
    outcome rather than raised.
    """
    if system == "setpoint" and ref is not None:
        raise ValueError("setpoint runs regulate to the origin; omit ref")
    if system == "tracking" and ref is None:
        raise ValueError("tracking system needs a reference profile")
    if ref is not None and ref.t_end < cfg.t_end - _EDGE_TOL:
        raise ValueError(
            f"profile ends at {ref.t_end} s but simulation needs {cfg.t_end} s"
        )
    if noise is not None and noise.sample_dt < cfg.dt:
        raise ValueError("noise sample_dt must be at least the integrator dt")

    channel = NoiseChannel(noise) if noise is not None else None
    control = _make_control(system, gains, ref, channel)
    kprop = gains.k if isinstance(gains, GainParams) else gains.kp
    if ref is None:
        ref_eval = lambda t: (0.0, 0.0, 0.0)  # noqa: E731
    else:
        ref_eval = ref.eval

    dt = cfg.dt
    h2 = 0.5 * dt
    n = int(round(cfg.t_end / dt))
    cols = {name: np.empty(n + 1) for name in COLUMNS}
    ct, cx1, cx2, cr, crdot, ce1, ce2, cu, cV, cVd = (cols[c] for c in COLUMNS)

    hold_steps = max(int(math.ceil(cfg.conv_hold / dt - _EDGE_TOL)), 0)
    below_since = -1
    terminated = Termination.COMPLETED
    converged_at: float | None = None

    x1, x2 = float(init[0]), float(init[1])
    stored = 0
    i = 0
    while True:
        t = i * dt
        r, rdot, rddot = ref_eval(t)
        e1, e2 = x1 - r, x2 - rdot
        try:
            u = control(t, x1, x2)
        except SingularInput:
            u = math.nan
            terminated = Termination.SINGULAR
        ct[i], cx1[i], cx2[i], cr[i], crdot[i] = t, x1, x2, r, rdot
        ce1[i], ce2[i], cu[i] = e1, e2, u
        cV[i] = 0.5 * kprop * e1 * e1 + 0.5 * e2 * e2
        cVd[i] = kprop * e1 * e2 + e2 * (u - rddot)
        stored = i + 1
        if terminated is Termination.SINGULAR:
            break

        if stop_early:
            if math.hypot(e1, e2) < cfg.conv_eps:
                if below_since < 0:
                    below_since = i
                if i - below_since >= hold_steps:
                    terminated = Termination.CONVERGED
                    converged_at = t
                    break
            else:
                below_since = -1

        if i == n:
            break

        # classical RK4 on the plant (x1' = x2, x2' = u); stage 1 reuses
        # the sample's control evaluation
        try:
            k1b = u
            k1a = x2
            ta = t + h2
            y1, y2 = x1 + h2 * k1a, x2 + h2 * k1b
            k2b = control(ta, y1, y2)
            k2a = y2
            y1, y2 = x1 + h2 * k2a, x2 + h2 * k2b
            k3b = control(ta, y1, y2)
            k3a = y2
            y1, y2 = x1 + dt * k3a, x2 + dt * k3b
            k4b = control(t + dt, y1, y2)
            k4a = y2
        except SingularInput:
            terminated = Termination.SINGULAR
            break
        x1 = x1 + (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        x2 = x2 + (dt / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        i += 1
        if not (math.isfinite(x1) and math.isfinite(x2)) or math.hypot(x1, x2) > cfg.blowup_bound:
            terminated = Termination.DIVERGED
            if math.isfinite(x1) and math.isfinite(x2):
                t = i * dt
                r, rdot, rddot = ref_eval(t)
                e1, e2 = x1 - r, x2 - rdot
                ct[i], cx1[i], cx2[i], cr[i], crdot[i] = t, x1, x2, r, rdot
                ce1[i], ce2[i], cu[i] = e1, e2, math.nan
                cV[i] = 0.5 * kprop * e1 * e1 + 0.5 * e2 * e2
                cVd[i] = math.nan
                stored = i + 1
            break

    series = TimeSeries(
        **{name: cols[name][:stored].copy() for name in COLUMNS}, dt=dt
    )
    return SimOutcome(series=series, terminated=terminated, converged_at=converged_at)


def detect_convergence(ts: TimeSeries, eps: float, hold: float) -> float | None:
    """Earliest grid time t with ||(e1,e2)|| < eps throughout [t, t+hold].

    The full hold window must fit inside the series; returns None when
    no window qualifies.
    """
    if len(ts) == 0:
        raise ValueError("empty series")
    below = ts.error_norm() < eps
    h = max(int(math.ceil(hold / ts.dt - _EDGE_TOL)), 0)
    if h >= len(ts):
        return None
    counts = np.convolve(below.astype(int), np.ones(h + 1, dtype=int), mode="valid")
    hits = np.nonzero(counts == h + 1)[0]
    if len(hits) == 0:
        return None
    return float(ts.t[hits[0]])


def verify_step(
    system: str,
    gains: GainParams | PDGains,
    init: Sequence[float],
    ref: RefProfile | None,
    cfg: IntegratorConfig,
    dt2: float | None = None,
) -> float:
    """Richardson-style self check: max pointwise state discrepancy
    between runs at cfg.dt and dt2 (default cfg.dt/2), compared on the
    coarse grid.  Both runs go the full horizon without early stopping.
    """
    if dt2 is None:
        dt2 = cfg.dt / 2.0
    ratio = cfg.dt / dt2
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > _EDGE_TOL:
        raise ValueError("cfg.dt must be an integer multiple of dt2")
    a = simulate(system, gains, init, ref, cfg, stop_early=False).series
    b = simulate(system, gains, init, ref, replace(cfg, dt=dt2), stop_early=False).series
    na = min(len(a), (len(b) - 1) // m + 1)
    d1 = np.abs(a.x1[:na] - b.x1[: (na - 1) * m + 1 : m])
    d2 = np.abs(a.x2[:na] - b.x2[: (na - 1) * m + 1 : m])
    return float(max(d1.max(), d2.max()))
