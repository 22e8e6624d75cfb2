"""STFT frontend: multichannel spectrograms and the log cross-power envelope.

The DFT is forward-unnormalised (plain rfft of the windowed frame).  Every
statistic consumed downstream is a ratio or a rank, so the normalisation
choice cancels; a scale-invariance test pins that property.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window


@dataclass(frozen=True)
class StftConfig:
    window_len: int = 512
    frameshift: int = 8
    sample_rate: float = 16000.0
    window_kind: str = "hann"
    xi: float = 1e-3

    def __post_init__(self):
        if self.window_len <= 0 or self.frameshift <= 0:
            raise ValueError("window_len and frameshift must be positive")
        if self.frameshift > self.window_len:
            raise ValueError("frameshift must not exceed window_len")
        if (self.window_len // 4) % self.frameshift != 0:
            raise ValueError("frameshift must divide window_len/4 so the "
                             "coarse-to-fine shift ratio is an integer")
        if self.xi <= 0:
            raise ValueError("xi must be positive")

    @property
    def num_bins(self):
        return self.window_len // 2 + 1

    @property
    def bin_hz(self):
        return self.sample_rate / self.window_len


@dataclass(frozen=True, eq=False)
class MultichannelSpectrogram:
    """Complex STFT frames indexed (channel, frame, bin)."""

    data: np.ndarray
    sample_rate: float
    window_len: int
    frameshift: int

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError("spectrogram data must be (channels, frames, bins)")

    @property
    def num_channels(self):
        return self.data.shape[0]

    @property
    def num_frames(self):
        return self.data.shape[1]

    @property
    def num_bins(self):
        return self.data.shape[2]

    @property
    def bin_hz(self):
        return self.sample_rate / self.window_len

    def bin_frequency(self, k):
        return np.asarray(k) * self.bin_hz


def stft(signal, cfg: StftConfig) -> MultichannelSpectrogram:
    """One-sided STFT of a (channels, samples) or (samples,) buffer.

    Frame n covers samples [n*frameshift, n*frameshift + window_len); only
    frames where a full window fits are emitted.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError("signal must be 1-D or (channels, samples)")
    if x.shape[1] < cfg.window_len:
        raise ValueError("signal shorter than one window")
    window = get_window(cfg.window_kind, cfg.window_len, fftbins=True)
    frames = sliding_window_view(x, cfg.window_len, axis=1)[:, ::cfg.frameshift]
    data = np.fft.rfft(frames * window, axis=2)
    return MultichannelSpectrogram(data=data, sample_rate=cfg.sample_rate,
                                   window_len=cfg.window_len,
                                   frameshift=cfg.frameshift)


def cross_power_envelope(spec: MultichannelSpectrogram) -> np.ndarray:
    """Average cross-power magnitude per (frame, bin).

    The double sum over channel pairs of |x_a * conj(x_b)| collapses to
    (mean of |x_i|)^2 because each term factors into |x_a|*|x_b|.
    """
    mags = np.abs(spec.data)
    return (mags.mean(axis=0)) ** 2


def log_compress(cross_power, xi) -> np.ndarray:
    """log10(C + xi); xi keeps silent bins pinned at log10(xi)."""
    if xi <= 0:
        raise ValueError("xi must be positive")
    return np.log10(np.asarray(cross_power) + xi)
