import dataclasses
import math

import numpy as np
import pytest

from nldamp import (
    GainParams,
    IntegratorConfig,
    NoiseConfig,
    PDGains,
    Termination,
    detect_convergence,
    make_constant,
    make_slope,
    rk4_step,
    simulate,
    verify_step,
)

FIG4_INITS = [(0.5, 50.0), (0.1, 20.0), (1.0, 0.0), (1.5, -30.0), (0.3, -20.0)]


def test_config_validation():
    IntegratorConfig()
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(dt=2.0, t_end=1.0)
    with pytest.raises(ValueError):
        IntegratorConfig(conv_eps=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(blowup_bound=1e-9)


def test_rk4_step_pure_integrator():
    # e1' = e2, e2' = 0 is integrated exactly
    field = lambda t, s: (s[1], 0.0)  # noqa: E731
    out = rk4_step(field, 0.0, (0.0, 1.0), 0.1)
    assert out[0] == pytest.approx(0.1, abs=1e-16)
    assert out[1] == 1.0


def test_rk4_step_exponential_decay():
    out = rk4_step(lambda t, s: -s, 0.0, (1.0, 1.0), 0.1)
    assert abs(out[0] - math.exp(-0.1)) < 1e-7
    assert out[0] == out[1]


def test_rk4_step_zero_dt():
    out = rk4_step(lambda t, s: -s, 0.0, (1.0, 2.0), 0.0)
    assert tuple(out) == (1.0, 2.0)


def test_tracking_run_reaches_small_error():
    # the five reference initial states track r(t) = t without incident
    cfg = IntegratorConfig(dt=1e-4, t_end=5.0)
    ref = make_slope(1.0, 5.0)
    p = GainParams(100.0, 1e-4)
    for init in FIG4_INITS:
        out = simulate("tracking", p, init, ref, cfg)
        assert out.terminated is Termination.COMPLETED
        # near-origin decay of the regularized loop is hyperbolic, so the
        # error is small at t_end but above the 1e-6 convergence gate
        assert out.series.error_norm()[-1] < 1e-4
        assert out.series.e1[0] == init[0]
        assert out.series.e2[0] == init[1] - 1.0


def test_exact_start_on_reference_converges_after_hold():
    cfg = IntegratorConfig(dt=1e-3, t_end=2.0, conv_hold=0.05)
    ref = make_slope(1.0, 2.0)
    out = simulate("tracking", GainParams(100.0, 1e-4), (0.0, 1.0), ref, cfg)
    assert out.terminated is Termination.CONVERGED
    assert out.converged_at == pytest.approx(0.05, abs=1e-12)
    # the limit solution is e = 0; the record stays at rounding scale
    assert np.max(np.abs(out.series.e1)) < 1e-14
    assert np.max(np.abs(out.series.e2)) < 1e-14


def test_setpoint_convergence_and_series_columns():
    cfg = IntegratorConfig(dt=1e-4, t_end=2.0)
    out = simulate("setpoint", GainParams(100.0), (1.0, 0.0), None, cfg)
    assert out.terminated is Termination.CONVERGED
    assert out.converged_at == pytest.approx(0.6485, abs=1e-3)
    s = out.series
    assert np.all(s.r == 0.0) and np.all(s.rdot == 0.0)
    assert np.array_equal(s.e1, s.x1) and np.array_equal(s.e2, s.x2)
    # stored errors satisfy the column identity exactly
    assert np.array_equal(s.e1, s.x1 - s.r)
    assert np.array_equal(s.e2, s.x2 - s.rdot)
    # V column is the quadratic energy of the stored errors (same
    # operation order as the recorder)
    assert np.array_equal(s.V, 0.5 * 100.0 * s.e1 * s.e1 + 0.5 * s.e2 * s.e2)


def test_setpoint_singular_start_is_recorded():
    cfg = IntegratorConfig(dt=1e-4, t_end=1.0)
    out = simulate("setpoint", GainParams(100.0, mu=0.0), (0.0, 1.0), None, cfg)
    assert out.terminated is Termination.SINGULAR
    assert out.converged_at is None
    assert len(out.series) == 1
    assert math.isnan(out.series.u[0])


def test_setpoint_rejects_reference():
    with pytest.raises(ValueError):
        simulate("setpoint", GainParams(1.0), (1.0, 0.0), make_slope(1.0, 2.0),
                 IntegratorConfig(t_end=1.0))


def test_divergence_guard():
    # an unstable PD loop (negative damping) must be recorded, not crash
    cfg = IntegratorConfig(dt=1e-3, t_end=50.0, blowup_bound=1e4)
    out = simulate("pd", PDGains(kp=1.0, kd=-2.0), (1.0, 0.0), None, cfg)
    assert out.terminated is Termination.DIVERGED
    assert np.hypot(out.series.x1[-1], out.series.x2[-1]) > 1e4


def test_energy_monotone_for_constant_rate_reference():
    cfg = IntegratorConfig(dt=1e-4, t_end=5.0)
    ref = make_slope(1.0, 5.0)
    p = GainParams(100.0, 1e-4)
    for init in FIG4_INITS:
        s = simulate("tracking", p, init, ref, cfg, stop_early=False).series
        tol = 1e-9 * max(1.0, s.V[0])
        assert np.all(np.diff(s.V) <= tol)


def test_no_x2_axis_crossing_setpoint():
    cfg = IntegratorConfig(dt=1e-4, t_end=2.0)
    for x1_0 in (1.0, -1.0, 0.1, -0.1):
        for x2_0 in (0.0, 10.0, -10.0):
            out = simulate("setpoint", GainParams(100.0), (x1_0, x2_0), None, cfg)
            assert out.terminated is Termination.CONVERGED
            signs = np.sign(out.series.x1)
            assert np.all(signs == signs[0])


def test_pairwise_forgetting_setpoint():
    # runs differing only in init coincide at t_end once both converged
    cfg = IntegratorConfig(dt=1e-4, t_end=2.0)
    finals = []
    for init in ((1.0, 0.0), (0.5, 5.0), (2.0, -3.0)):
        out = simulate("setpoint", GainParams(100.0), init, None, cfg,
                       stop_early=False)
        assert detect_convergence(out.series, 1e-6, 0.05) is not None
        finals.append((out.series.x1[-1], out.series.x2[-1]))
    for a in finals:
        for b in finals:
            assert math.hypot(a[0] - b[0], a[1] - b[1]) < 1e-6


def test_determinism_bit_identical():
    cfg = IntegratorConfig(dt=1e-4, t_end=1.0)
    ref = make_slope(1.0, 1.0)
    noise = NoiseConfig(sigma1=1e-4, sigma2=1e-3, sample_dt=1e-3, seed=77)
    a = simulate("tracking", GainParams(100.0, 1e-4), (1.0, 0.0), ref, cfg, noise=noise).series
    b = simulate("tracking", GainParams(100.0, 1e-4), (1.0, 0.0), ref, cfg, noise=noise).series
    for col in ("t", "x1", "x2", "r", "rdot", "e1", "e2", "u", "V", "Vdot"):
        assert np.array_equal(a.column(col), b.column(col))


def test_noise_corrupts_control_not_state():
    cfg = IntegratorConfig(dt=1e-4, t_end=1.0)
    ref = make_slope(1.0, 1.0)
    noise = NoiseConfig(sigma1=1e-4, sigma2=1e-3, sample_dt=1e-3, seed=77)
    clean = simulate("tracking", GainParams(100.0, 1e-4), (1.0, 0.0), ref, cfg).series
    noisy = simulate("tracking", GainParams(100.0, 1e-4), (1.0, 0.0), ref, cfg, noise=noise).series
    # stored errors remain the clean-state identity even under noise
    assert np.array_equal(noisy.e1, noisy.x1 - noisy.r)
    assert np.array_equal(noisy.e2, noisy.x2 - noisy.rdot)
    # but the trajectories differ because the controller saw noise
    assert not np.array_equal(clean.x2, noisy.x2)


def test_noise_sample_dt_must_cover_integrator_dt():
    cfg = IntegratorConfig(dt=1e-3, t_end=1.0)
    noise = NoiseConfig(sigma1=1e-4, sigma2=1e-3, sample_dt=1e-4, seed=1)
    with pytest.raises(ValueError):
        simulate("tracking", GainParams(100.0, 1e-4), (1.0, 0.0),
                 make_slope(1.0, 1.0), cfg, noise=noise)


def test_detect_convergence_all_zero():
    cfg = IntegratorConfig(dt=1e-3, t_end=1.0)
    out = simulate("tracking", GainParams(100.0, 1e-4), (0.0, 1.0),
                   make_slope(1.0, 1.0), cfg, stop_early=False)
    assert detect_convergence(out.series, 1e-6, 0.05) == 0.0


def test_detect_convergence_synthetic_crossing():
    # monotone decay crossing eps at t = 1.3
    dt = 1e-3
    t = np.arange(0, 3.0 + dt / 2, dt)
    e = 1e-3 * 10 ** (-(t - 1.3) / 3.0)
    z = np.zeros_like(t)
    from nldamp.integrator import TimeSeries

    ts = TimeSeries(t=t, x1=e, x2=z, r=z, rdot=z, e1=e, e2=z, u=z, V=z, Vdot=z, dt=dt)
    found = detect_convergence(ts, 1e-3, 0.5)
    assert found == pytest.approx(1.3 + dt, abs=dt)
    assert detect_convergence(ts, 1e-9, 0.5) is None


def test_detect_convergence_window_must_fit():
    dt = 1e-2
    t = np.arange(0, 0.1, dt)
    z = np.zeros_like(t)
    from nldamp.integrator import TimeSeries

    ts = TimeSeries(t=t, x1=z, x2=z, r=z, rdot=z, e1=z, e2=z, u=z, V=z, Vdot=z, dt=dt)
    assert detect_convergence(ts, 1e-6, 1.0) is None


def test_verify_step_linear_system():
    cfg = IntegratorConfig(dt=1e-3, t_end=2.0)
    d = verify_step("pd", PDGains(100.0, 20.0), (1.0, 0.0),
                    make_constant(0.0, 2.0), cfg)
    assert d < 2e-9


def test_verify_step_tracking():
    cfg = IntegratorConfig(dt=1e-4, t_end=2.0)
    d = verify_step("tracking", GainParams(100.0, 1e-4), (1.0, 0.0),
                    make_slope(1.0, 2.0), cfg)
    assert d < 1e-6


def test_verify_step_equal_dt_is_zero():
    cfg = IntegratorConfig(dt=1e-3, t_end=1.0)
    d = verify_step("pd", PDGains(100.0, 20.0), (1.0, 0.0), None, cfg, dt2=1e-3)
    assert d == 0.0
