"""Q-Wiener spectrum, exact OU transitions, moment tables, causality."""

import numpy as np
import pytest

from torusflow import fields, grid, noise
from torusflow.fields import Field


def single_mode_u0(n=16):
    c = np.zeros((2, n, n), complex)
    c[0, 0, 1] = -0.5j
    c[0, 0, -1] = 0.5j
    return Field(c, 2)  # sin(y) e_x, |k| = 1


def test_default_spectrum_regularity():
    spec = noise.default_spectrum(2, 32)
    assert spec.beta == pytest.approx(1.3)
    assert spec.tail_convergent(2 / 2 - 1 + 0.1)
    assert not spec.tail_convergent(spec.beta - 1 + 0.01)
    spec3 = noise.default_spectrum(3, 16)
    assert spec3.tail_convergent(3 / 2 - 1 + 0.1)


def test_mode_std_masks_mean_and_nyquist():
    g = noise.NoiseSpectrum(2, 16, 1.0).mode_std()
    assert g[0, 0] == 0.0
    assert np.all(g[8, :] == 0.0) and np.all(g[:, 8] == 0.0)
    assert g[0, 1] == pytest.approx(2.0 ** -0.5)


def test_hermitian_noise_gives_real_samples():
    w = noise.hermitian_unit_noise(np.random.default_rng(0), 2, 32)
    samp = np.fft.ifftn(w, axes=(-2, -1)) * 32 ** 2
    assert np.abs(samp.imag).max() < 1e-12


def test_hermitian_noise_unit_mode_variance():
    rng = np.random.default_rng(1)
    ws = np.stack([noise.hermitian_unit_noise(rng, 2, 16) for _ in range(2000)])
    second = (np.abs(ws[:, 0, 3, 5]) ** 2).mean()
    assert second == pytest.approx(1.0, abs=0.1)


def test_solenoidal_noise_divergence_free():
    sol = noise.solenoidal_unit_noise(np.random.default_rng(2), 2, 32)
    assert np.abs(fields.div(Field(sol, 2)).coeffs).max() < 1e-12


def test_wiener_trace_convention():
    spec = noise.default_spectrum(2, 16, amplitude=0.7)
    vals = []
    for i in range(200):
        path = noise.wiener_path(spec, 1.0, 1.0 / 4, seed=(1, i))
        vals.append(fields.parseval_l2(path.field(4)) ** 2)
    vals = np.array(vals)
    err = 3 * vals.std(ddof=1) / np.sqrt(len(vals))
    assert abs(vals.mean() - spec.trace()) < err


def test_ou_variance_matches_closed_form():
    amp, t, dt = 0.5, 0.5, 1.0 / 32
    spec = noise.NoiseSpectrum(2, 16, 0.0, amp)
    nsamp = 2000
    vals = np.zeros(nsamp)
    for i in range(nsamp):
        path = noise.sample_z_path(spec, t, dt, seed=None,
                                   rng=np.random.default_rng((7, i)))
        vals[i] = (np.abs(path.frames[-1][:, 1, 0]) ** 2).sum()
    lam = 1.0 + 1.0
    closed = amp ** 2 * (1.0 - np.exp(-2 * lam * t)) / (2 * lam)
    assert abs(vals.mean() - closed) < 3 * vals.std(ddof=1) / np.sqrt(nsamp)


def test_ou_stationary_variance():
    amp = 0.5
    spec = noise.NoiseSpectrum(2, 16, 0.0, amp)
    vals = np.zeros(1500)
    for i in range(vals.size):
        path = noise.sample_z_path(spec, 4.0, 1.0 / 8, seed=None,
                                   rng=np.random.default_rng((8, i)))
        vals[i] = (np.abs(path.frames[-1][:, 1, 0]) ** 2).sum()
    closed = amp ** 2 / 4.0
    assert abs(vals.mean() - closed) < 3 * vals.std(ddof=1) / np.sqrt(vals.size)


def test_noiseless_semigroup_decay():
    silent = noise.NoiseSpectrum(2, 16, 0.0, 0.0)
    u0 = single_mode_u0()
    path = noise.sample_z_path(silent, 1.0, 1.0 / 16, seed=3, u0=u0)
    ratio = fields.parseval_l2(path.field(16)) / fields.parseval_l2(u0)
    assert ratio == pytest.approx(np.exp(-2.0), rel=1e-12)


def test_zero_initial_zero_noise_stays_zero():
    silent = noise.NoiseSpectrum(2, 16, 0.0, 0.0)
    path = noise.sample_z_path(silent, 1.0, 1.0 / 8, seed=0)
    assert np.abs(path.frames).max() == 0.0


def test_z_frames_divergence_free():
    spec = noise.default_spectrum(2, 32)
    path = noise.sample_z_path(spec, 0.5, 1.0 / 8, seed=11)
    for j in range(path.n_frames):
        assert np.abs(fields.div(path.field(j)).coeffs).max() < 1e-12


def test_seed_reproducibility_and_causality():
    spec = noise.default_spectrum(2, 16)
    a = noise.sample_z_path(spec, 1.0, 1.0 / 8, seed=5)
    b = noise.sample_z_path(spec, 1.0, 1.0 / 8, seed=5)
    assert np.array_equal(a.frames, b.frames)
    longer = noise.sample_z_path(spec, 2.0, 1.0 / 8, seed=5)
    assert np.array_equal(a.frames, longer.frames[:9])


def test_moment_table_flat_across_windows():
    spec = noise.default_spectrum(2, 16)
    rows = noise.estimate_convolution_moments(spec, 0.25, 2.0, windows=5,
                                              samples=60, dt=1.0 / 16, seed=4)
    ests = [r["estimate"] for r in rows]
    assert max(ests) / min(ests) < 1.5
    assert all(r["stderr"] > 0 for r in rows)


def test_moment_table_zero_noise():
    silent = noise.NoiseSpectrum(2, 16, 0.0, 0.0)
    rows = noise.estimate_convolution_moments(silent, 0.25, 2.0, windows=2,
                                              samples=5, dt=1.0 / 8)
    assert all(r["estimate"] == 0.0 for r in rows)


def test_moment_estimate_monotone_in_trace():
    ests = []
    for amp in (0.5, 1.0, 2.0):
        spec = noise.NoiseSpectrum(2, 16, 1.3, amp)
        rows = noise.estimate_convolution_moments(spec, 0.25, 2.0, windows=1,
                                                  samples=40, dt=1.0 / 16, seed=9)
        ests.append(rows[0]["estimate"])
    assert ests[0] < ests[1] < ests[2]


def test_heat_decay_single_mode_bounded():
    rep = noise.heat_decay_report(single_mode_u0(), p1=2.0)
    assert np.isfinite(rep["sup"])
    # single mode: ||e^{t(Lap-1)}u0||_inf = e^{-2t}||u0||_inf dominates the bound
    assert rep["sup"] <= 1.0


def test_heat_decay_stable_under_refinement():
    sups = []
    for n in (32, 64):
        c = np.full((2, n, n), 1.0 / n, dtype=complex)
        u0 = fields.leray(Field(grid.zero_nyquist(c, 2), 2))
        sups.append(noise.heat_decay_report(u0, p1=2.0)["sup"])
    assert 0.25 < sups[1] / sups[0] < 4.0


def test_heat_decay_zero_field():
    z = Field(np.zeros((2, 16, 16), complex), 2)
    assert noise.heat_decay_report(z, p1=2.0)["sup"] == 0.0


def test_holder_norm_rejects_bad_delta():
    spec = noise.default_spectrum(2, 16)
    path = noise.sample_z_path(spec, 0.5, 1.0 / 8, seed=0)
    with pytest.raises(ValueError, match="delta"):
        noise.window_holder_norm(path, 0, 4, 0.7)
