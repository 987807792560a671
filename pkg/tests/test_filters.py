import math

import numpy as np
import pytest

from exradon import filters

import oracles

DELTA = 1.0 / 128.0
CUTOFF = math.pi / DELTA


def test_ramp_center_tap():
    k = filters.ramp_kernel(128 * math.pi, DELTA, 8)
    assert k.tap(0) == pytest.approx((128 * math.pi) ** 2 / (2 * math.pi), rel=1e-12)
    assert k.tap(0) == pytest.approx(8192 * math.pi, rel=1e-12)


def test_ramp_even_and_quadrature():
    k = filters.ramp_kernel(CUTOFF, DELTA, 64)
    assert np.array_equal(k.taps, k.taps[::-1])
    for j in (1, 2, 7, 33, 64):
        ref = oracles.ramp_tap_quadrature(j * DELTA, CUTOFF)
        assert abs(k.tap(j) - ref) <= 1e-6 * abs(k.tap(0))


def test_shepp_logan_center_and_scaling():
    k = filters.shepp_logan_kernel(CUTOFF, DELTA, 4)
    assert k.tap(0) == pytest.approx(4 * CUTOFF ** 2 / math.pi ** 3, rel=1e-12)
    k2 = filters.shepp_logan_kernel(2 * CUTOFF, DELTA, 4)
    assert k2.tap(0) == pytest.approx(4 * k.tap(0), rel=1e-12)


def test_shepp_logan_quadrature():
    k = filters.shepp_logan_kernel(CUTOFF, DELTA, 64)
    for j in (0, 1, 3, 17, 64):
        ref = oracles.shepp_logan_tap_quadrature(j * DELTA, CUTOFF)
        assert abs(k.tap(j) - ref) <= 1e-6 * abs(k.tap(0))


def test_shepp_logan_removable_point():
    # closed form stays finite at l = 0.5*pi/cutoff where a denominator vanishes
    l = 0.5 * math.pi / CUTOFF
    v = filters.shepp_logan_kernel_value(np.array([l, -l]), CUTOFF)
    expected = 2 * CUTOFF ** 2 / math.pi ** 3
    assert v == pytest.approx([expected, expected], rel=1e-6)


def test_hilbert_eps_properties():
    eps = DELTA / 8
    k = filters.hilbert_eps_kernel(eps, DELTA, 32)
    assert k.tap(0) == 0.0
    assert np.allclose(k.taps, -k.taps[::-1])
    # quadrature of the exponentially regularized sign spectrum
    for j in (1, 5, 20):
        ref = oracles.hilbert_eps_tap_quadrature(j * DELTA, eps)
        assert k.tap(j) == pytest.approx(ref, rel=1e-6)


def test_hilbert_band_properties():
    k = filters.hilbert_band_kernel(CUTOFF, DELTA, 32)
    assert k.tap(0) == 0.0
    for j in (1, 2, 9, 32):
        ref = oracles.hilbert_band_tap_quadrature(j * DELTA, CUTOFF)
        assert k.tap(j) == pytest.approx(ref, rel=1e-9)


def test_hilbert_kl_values():
    k = filters.hilbert_kl_taps(8)
    assert k.tap(0) == 0.0
    assert k.tap(1) == pytest.approx(2 * math.log(2) / math.pi, rel=1e-15)
    # n > 1 branch, frozen from direct evaluation of the log form
    h2 = (0.5 * math.log(3.0 / 4.0) + math.log(3.0)) / math.pi
    assert h2 == pytest.approx(0.30391, abs=5e-6)
    assert k.tap(2) == pytest.approx(h2, rel=1e-15)
    assert np.allclose(k.taps, -k.taps[::-1])


def test_ert_ramp_reduces_to_shepp_logan():
    k0 = filters.ert_ramp_kernel(CUTOFF, 0.0, DELTA, 16)
    ksl = filters.shepp_logan_kernel(CUTOFF, DELTA, 16)
    assert np.array_equal(k0.taps, ksl.taps)


def test_ert_ramp_center_tap():
    mu = 3.0
    k = filters.ert_ramp_kernel(CUTOFF, mu, DELTA, 8)
    assert k.tap(0) == pytest.approx(4 * CUTOFF ** 2 / math.pi ** 3 - mu ** 2 / (2 * math.pi),
                                     rel=1e-12)


def test_ert_ramp_requires_cutoff_above_mu():
    with pytest.raises(ValueError):
        filters.ert_ramp_kernel(2.0, 3.0, DELTA, 8)
    with pytest.raises(ValueError):
        filters.ert_ramp_kernel(CUTOFF, 1.0 + 1.0j, DELTA, 8)


def test_ert_ramp_frequency_response():
    # DTFT of the taps approximates |w| outside the removed band and the
    # (window-1)*|w| leakage inside it
    mu, hw = 3.0, 2048
    k = filters.ert_ramp_kernel(CUTOFF, mu, DELTA, hw)
    ls = DELTA * np.arange(-hw, hw + 1)
    for w in (10.0, 57.0, 200.0):
        resp = np.sum(k.taps * np.cos(w * ls)) * DELTA
        window = math.sin(0.5 * math.pi * w / CUTOFF) / (0.5 * math.pi * w / CUTOFF)
        assert resp == pytest.approx(w * window, rel=2e-3)
    wlow = 1.5
    resp = np.sum(k.taps * np.cos(wlow * ls)) * DELTA
    window = math.sin(0.5 * math.pi * wlow / CUTOFF) / (0.5 * math.pi * wlow / CUTOFF)
    assert resp == pytest.approx(wlow * (window - 1.0), abs=2e-3 * mu)


def test_lowband_sine_response():
    # sine moment int k(l) sin(w l) dl is -w inside |w| < mu and 0 outside;
    # the kernel tail decays like 1/l so truncation leaves ~1e-2 ripple
    mu, hw = 3.0, 16384
    k = filters.lowband_sine_kernel(mu, DELTA, hw)
    ls = DELTA * np.arange(-hw, hw + 1)
    for w, want in ((1.0, -1.0), (2.5, -2.5), (5.0, 0.0), (40.0, 0.0)):
        resp = np.sum(k.taps * np.sin(w * ls)) * DELTA
        assert resp == pytest.approx(want, abs=0.02)


def test_convolve_delta_row_returns_taps():
    k = filters.shepp_logan_kernel(CUTOFF, DELTA, 16)
    row = np.zeros(33)
    row[16] = 1.0
    q = filters.convolve_rows(row, k)
    assert np.allclose(q[0], k.taps * DELTA, rtol=1e-14)


def test_convolve_zero_rows():
    k = filters.ramp_kernel(CUTOFF, DELTA, 8)
    q = filters.convolve_rows(np.zeros((3, 8)), k)
    assert np.all(q == 0.0)


def test_convolve_matches_naive():
    rng = np.random.default_rng(5)
    row = rng.normal(size=24)
    k = filters.ert_ramp_kernel(CUTOFF, 3.0, DELTA, 24)
    got = filters.convolve_rows(row, k)[0]
    ref = oracles.naive_convolution(row, k.taps, DELTA)
    assert np.allclose(got, ref, rtol=1e-12, atol=1e-9)


def test_convolve_linear_and_shift_equivariant():
    rng = np.random.default_rng(6)
    k = filters.ramp_kernel(CUTOFF, DELTA, 32)
    a, b = rng.normal(size=(2, 32))
    qa = filters.convolve_rows(a, k)[0]
    qb = filters.convolve_rows(b, k)[0]
    qab = filters.convolve_rows(2.0 * a - 3.0 * b, k)[0]
    assert np.allclose(qab, 2.0 * qa - 3.0 * qb, atol=1e-8)
    # shifting a delta shifts the response on interior bins
    row = np.zeros(32)
    row[10] = 1.0
    q1 = filters.convolve_rows(row, k)[0]
    q2 = filters.convolve_rows(np.roll(row, 3), k)[0]
    assert np.allclose(q2[13:19], q1[10:16], atol=1e-12)
