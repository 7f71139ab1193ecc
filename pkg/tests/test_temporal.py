"""Concentration profile and ramp: window norms, defect primitive, guards."""

import numpy as np
import pytest

from torusflow import temporal
from torusflow.mollify import fd_center


def make(kappa, frames_per_window=32, rate=1, periods=3):
    dt = 1.0 / (rate * kappa * frames_per_window)
    p = kappa * frames_per_window
    return temporal.build_oscillator(kappa, rate, dt, periods * p + 1)


@pytest.mark.parametrize("kappa", [16, 64, 256])
def test_unit_mass_every_window(kappa):
    prof = make(kappa)
    for w in range(3):
        assert prof.window_norm(2.0, w) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("kappa", [16, 64, 256])
def test_defect_primitive_bounded_and_periodic(kappa):
    prof = make(kappa)
    assert np.abs(prof.h).max() <= 1.0
    ends = prof.h[:: prof.frames_per_period]
    assert np.abs(ends).max() < 1e-10


def test_lebesgue_slopes_in_kappa():
    kappas = [16, 64, 256]
    profs = [make(k) for k in kappas]
    for m, expect in [(1.0, -0.5), (4.0, 0.25), (np.inf, 0.5)]:
        vals = [p.window_norm(m) for p in profs]
        s = np.polyfit(np.log(kappas), np.log(vals), 1)[0]
        assert abs(s - expect) < 0.05, f"L{m} slope {s:+.3f}"


def test_rate_speeds_the_period():
    prof = temporal.build_oscillator(8, 4, 1.0 / 512, 1025)
    p = prof.frames_per_period
    assert p == 128  # 1/(rate*dt)
    assert np.array_equal(prof.g[:p], prof.g[p: 2 * p])


def test_defect_derivative_identity():
    # centered difference of h returns rate*(smoothed g^2 - 1) exactly:
    # the trapezoid construction makes this an identity, not an approximation
    prof = temporal.build_oscillator(8, 4, 1.0 / 512, 513)
    g2 = prof.g ** 2
    smooth = (np.roll(g2, 1) + 2 * g2 + np.roll(g2, -1)) / 4.0
    lhs = fd_center(prof.h, prof.dt)[1:-1]
    rhs = (prof.rate * (smooth - 1.0))[1:-1]
    assert np.abs(lhs - rhs).max() < 1e-10


def test_mean_square_defect_vanishes():
    prof = make(32)
    p = prof.frames_per_period
    g2 = np.concatenate([prof.g[:p] ** 2, prof.g[:1] ** 2])
    assert np.trapezoid(g2, dx=1.0 / p) - 1.0 == pytest.approx(0.0, abs=1e-10)


def test_cutoff_plateaus():
    theta = temporal.time_cutoff(1.0 / 16, 1.0 / 256, 257)
    t = np.arange(257) / 256.0
    half = np.sqrt(1.0 / 16) / 2.0
    assert theta[0] == 0.0
    assert np.abs(theta[t <= half]).max() == 0.0
    assert np.abs(theta[t >= 2 * half] - 1.0).max() == 0.0
    assert (np.diff(theta) >= -1e-15).all()


def test_cutoff_derivative_constant_scale_invariant():
    cs = []
    for ell in (2.0 ** -4, 2.0 ** -6, 2.0 ** -8):
        c1, _ = temporal.ramp_derivative_constants(ell, np.sqrt(ell) / 64.0)
        cs.append(c1)
        assert c1 <= 8.0
    assert max(cs) - min(cs) < 0.05


def test_unresolved_concentration_guard():
    with pytest.raises(ValueError, match="window"):
        temporal.build_oscillator(64, 1, 1.0 / 256, 100)
    prof = temporal.build_oscillator(64, 1, 1.0 / 256, 100, allow_unresolved=True)
    assert prof.frames_per_period == 256


def test_fractional_period_guard():
    with pytest.raises(ValueError, match="whole frame"):
        temporal.build_oscillator(8, 3, 1.0 / 256, 100)


def test_unresolved_ramp_guard():
    with pytest.raises(ValueError, match="half-width"):
        temporal.time_cutoff(1e-4, 1.0 / 64, 10)


def test_smoothstep_ends():
    u = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    s = temporal.smoothstep(u)
    assert s[0] == 0.0 and s[1] == 0.0
    assert s[2] == pytest.approx(0.5)
    assert s[3] == 1.0 and s[4] == 1.0
