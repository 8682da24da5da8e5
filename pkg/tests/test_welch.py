import numpy as np
import pytest
from scipy import signal

from lockedlaser.welch import angular_frequencies, cross_spectra, segment_layout


def test_layout_fits():
    lay = segment_layout(10_000, 64)
    assert lay.segment_length % 2 == 0
    assert lay.hop == lay.segment_length // 2
    assert lay.start == lay.segment_length
    assert lay.used_samples <= 10_000
    with pytest.raises(ValueError):
        segment_layout(10, 64)


def test_frequency_grid_symmetric():
    w = angular_frequencies(16, 0.1)
    np.testing.assert_allclose(w, -w[::-1])
    assert w[len(w) // 2] == 0.0


def test_matches_scipy_csd():
    rng = np.random.default_rng(3)
    n = 20_000
    a = rng.standard_normal(n)
    data = np.column_stack([a, np.convolve(a, [1.0, 0.5, 0.25], mode="same")
                            + 0.1 * rng.standard_normal(n)])
    h = 0.01
    lay = segment_layout(n, 16)
    acc = cross_spectra(data, h, lay)
    seg = data[lay.start:lay.used_samples]
    f, P = signal.csd(seg[:, 0], seg[:, 1], fs=1 / h, window="hann",
                      nperseg=lay.segment_length, noverlap=lay.hop, detrend="constant",
                      return_onesided=False, scaling="density")
    # a two-sided density per Hz equals the density per unit angular frequency
    # in the convention S(w) = int R(tau) exp(i w tau) dtau
    P = np.fft.fftshift(P)[1:]
    np.testing.assert_allclose(acc.mean[0, 1], P, rtol=1e-10, atol=1e-14)
    assert acc.n_segments == 16


def test_white_noise_level():
    rng = np.random.default_rng(11)
    h, D = 0.02, 3.0
    x = rng.standard_normal((200_000, 1)) * np.sqrt(D / h)
    acc = cross_spectra(x, h, segment_layout(len(x), 64))
    band = acc.mean[0, 0].real[5:-5]
    assert band.mean() == pytest.approx(D, rel=0.02)
