import numpy as np
import pytest

from nldamp import (
    InvalidProfile,
    NoiseChannel,
    NoiseConfig,
    OutOfDomain,
    make_constant,
    make_slope,
    make_trapezoid,
    noisy_measurement,
)


def test_slope_profile():
    prof = make_slope(1.0, 10.0)
    assert prof.eval(2.0) == (2.0, 1.0, 0.0)
    assert prof.eval(1.0) == (1.0, 1.0, 0.0)
    assert prof.transient_end == 0.0
    prof = make_slope(-2.0, 5.0)
    assert prof.eval(3.0) == (-6.0, -2.0, 0.0)


def test_constant_profile():
    prof = make_constant(0.0, 4.0)
    for t in (0.0, 1.7, 4.0):
        assert prof.eval(t) == (0.0, 0.0, 0.0)
    prof = make_slope(0.0, 4.0)
    assert prof.eval(2.2) == (0.0, 0.0, 0.0)


def test_domain_errors():
    prof = make_slope(1.0, 5.0)
    with pytest.raises(OutOfDomain):
        prof.eval(5.1)
    with pytest.raises(OutOfDomain):
        prof.eval(-0.1)
    # grid-edge slack: an ulp past the end must not raise
    prof.eval(5.0 + 1e-12)


def test_trapezoid_values():
    prof = make_trapezoid(v_max=1.0, a=1.0, t_cruise=2.0, t_end=6.0)
    r, rdot, rddot = prof.eval(0.5)
    assert (r, rdot, rddot) == (0.125, 0.5, 1.0)
    assert prof.eval(1.5)[1] == 1.0
    assert prof.eval(3.5)[1] == 0.5
    assert prof.transient_end == 4.0
    # total distance = ramp + cruise + ramp = 0.5 + 2 + 0.5
    assert prof.eval(6.0)[0] == pytest.approx(3.0, abs=1e-15)
    assert prof.eval(5.0)[1:] == (0.0, 0.0)


def test_trapezoid_zero_velocity_is_constant():
    prof = make_trapezoid(0.0, 1.0, 2.0, 5.0)
    assert prof.eval(2.5) == (0.0, 0.0, 0.0)


def test_trapezoid_negative_velocity():
    prof = make_trapezoid(-1.0, 1.0, 2.0, 6.0)
    assert prof.eval(1.5)[1] == -1.0
    assert prof.eval(6.0)[0] == pytest.approx(-3.0, abs=1e-15)


def test_trapezoid_must_fit():
    with pytest.raises(InvalidProfile):
        make_trapezoid(v_max=1.0, a=1.0, t_cruise=2.0, t_end=3.0)
    with pytest.raises(InvalidProfile):
        make_trapezoid(v_max=1.0, a=0.0, t_cruise=2.0, t_end=9.0)


def test_c1_continuity_at_joints():
    prof = make_trapezoid(v_max=1.3, a=2.7, t_cruise=1.1, t_end=8.0)
    for seg_prev, seg_next in zip(prof.segments, prof.segments[1:]):
        tb = seg_prev.t_end
        r_minus, rdot_minus, _ = seg_prev.eval(tb)
        r_plus, rdot_plus, _ = seg_next.eval(tb)
        assert r_minus == r_plus
        assert rdot_minus == rdot_plus


def test_rddot_zero_outside_accelerating_segments():
    prof = make_trapezoid(v_max=1.0, a=1.0, t_cruise=2.0, t_end=6.0)
    tau = prof.transient_end
    for t in np.linspace(tau + 1e-9, 6.0, 50):
        assert prof.eval(float(t))[2] == 0.0


def test_noise_off_is_identity():
    ch = NoiseChannel(NoiseConfig(sigma1=0.0, sigma2=0.0, seed=1))
    for t in (0.0, 0.01, 0.5):
        assert ch.measure(t, 1.2, -3.4) == (1.2, -3.4)


def test_noise_determinism():
    cfg = NoiseConfig(sigma1=1e-3, sigma2=1e-2, sample_dt=1e-3, seed=123)
    t = np.arange(0, 0.5, 1e-4)
    seq_a = [NoiseChannel(cfg).measure(float(ti), 0.0, 0.0) for ti in t]
    seq_b = [NoiseChannel(cfg).measure(float(ti), 0.0, 0.0) for ti in t]
    assert seq_a == seq_b
    seq_c = [NoiseChannel(NoiseConfig(1e-3, 1e-2, 1e-3, seed=124)).measure(float(ti), 0.0, 0.0) for ti in t]
    assert seq_a != seq_c


def test_noise_zero_order_hold():
    cfg = NoiseConfig(sigma1=1.0, sigma2=1.0, sample_dt=1e-3, seed=9)
    ch = NoiseChannel(cfg)
    held = [ch.measure(j * 1e-4, 0.0, 0.0) for j in range(10)]  # within one window
    assert all(v == held[0] for v in held)
    nxt = ch.measure(1.05e-3, 0.0, 0.0)
    assert nxt != held[0]


def test_noise_statistics():
    # law-of-large-numbers bounds on the implemented generator
    sigma = 1e-3
    n = 100_000
    cfg = NoiseConfig(sigma1=sigma, sigma2=sigma, sample_dt=1e-3, seed=2024)
    ch = NoiseChannel(cfg)
    draws = np.array([ch.measure(j * 1e-3, 0.0, 0.0) for j in range(n)])
    for col in (0, 1):
        assert abs(draws[:, col].mean()) < 5 * sigma / np.sqrt(n)
        assert abs(draws[:, col].std() - sigma) < 0.02 * sigma
    # channels are uncorrelated
    xcorr = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
    assert abs(xcorr) < 0.02


def test_noisy_measurement_alias():
    cfg = NoiseConfig(sigma1=1e-3, sigma2=1e-3, sample_dt=1e-3, seed=5)
    a = noisy_measurement(1.0, 2.0, 0.0, NoiseChannel(cfg))
    b = NoiseChannel(cfg).measure(0.0, 1.0, 2.0)
    assert a == b


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(sigma1=-1.0, sigma2=0.0)
    with pytest.raises(ValueError):
        NoiseConfig(sigma1=0.0, sigma2=0.0, sample_dt=0.0)
