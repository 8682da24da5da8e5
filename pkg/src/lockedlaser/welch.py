"""Two-sided Welch cross-spectra with per-segment statistics.

Fixed choices: 50 % overlap, mean removed per segment, one warm-up segment
discarded from the front of the record. Densities are per unit angular
frequency in the convention ``S(w) = int R(tau) exp(i w tau) dtau`` so a
white process of strength ``D`` has ``S = D``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window


@dataclass(frozen=True)
class SegmentLayout:
    segment_length: int
    hop: int
    n_segments: int
    start: int

    @property
    def used_samples(self) -> int:
        return self.start + self.hop * (self.n_segments - 1) + self.segment_length


def segment_layout(n_samples: int, n_segments: int) -> SegmentLayout:
    """Largest even segment length fitting a warm-up segment plus ``n_segments``."""
    L = (2 * n_samples) // (n_segments + 3)
    L -= L % 2
    if L < 4:
        raise ValueError(f"{n_samples} samples are too few for {n_segments} segments")
    return SegmentLayout(L, L // 2, n_segments, L)


def angular_frequencies(segment_length: int, sample_interval: float) -> np.ndarray:
    """Ordered bins without the unpaired ``-Nyquist`` bin, so the grid is symmetric."""
    f = np.fft.fftshift(np.fft.fftfreq(segment_length, d=sample_interval))
    return 2.0 * np.pi * f[1:]


@dataclass
class WelchAccumulator:
    """Per-trajectory cross-spectral estimate, reduced in fixed segment order."""

    mean: np.ndarray        # complex (d, d, nfreq)
    seg_var_real: np.ndarray  # real (d, d, nfreq), variance of the real part over segments
    n_segments: int


def cross_spectra(data, sample_interval: float, layout: SegmentLayout,
                  window: str = "hann") -> WelchAccumulator:
    """Welch estimate of every channel pair of ``data`` (shape ``(n, d)``)."""
    data = np.asarray(data, dtype=float)
    L, hop, K, start = layout.segment_length, layout.hop, layout.n_segments, layout.start
    if data.shape[0] < layout.used_samples:
        raise ValueError("record shorter than the segment layout")
    win = get_window(window, L, fftbins=True)
    scale = sample_interval / np.sum(win**2)
    d = data.shape[1]
    total = np.zeros((d, d, L - 1), dtype=complex)
    total_sq = np.zeros((d, d, L - 1))
    for s in range(K):
        seg = data[start + s * hop:start + s * hop + L]
        seg = (seg - seg.mean(axis=0)) * win[:, None]
        X = np.fft.fftshift(np.fft.fft(seg, axis=0), axes=0)[1:].T
        P = np.conj(X)[:, None, :] * X[None, :, :] * scale
        total += P
        total_sq += P.real**2
    mean = total / K
    var = np.maximum(total_sq / K - mean.real**2, 0.0) * K / max(K - 1, 1)
    return WelchAccumulator(mean, var, K)
