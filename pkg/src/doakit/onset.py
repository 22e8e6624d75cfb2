"""Onset-based direct-path bin selection with transient rejection.

The power-envelope rate of change ranks time-frequency bins; frames around
detected transients (short, high-power events such as clicks or door
slams) are excluded before the top-K selection, and the surviving bins are
partitioned into a middle and a high frequency band.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OnsetConfig:
    n_t: int = 40
    k_select: int | None = None  # None: number of frames in the spectrogram
    v1: float = 3.0
    v2: float = 2.0
    delta_n: int = 72
    band_mid: tuple = (1000.0, 2000.0)
    band_high: tuple = (2000.0, 4914.2857142857)

    def __post_init__(self):
        if self.n_t < 1:
            raise ValueError("n_t must be at least 1")
        if self.k_select is not None and self.k_select < 1:
            raise ValueError("k_select must be at least 1")
        if self.delta_n < 2 or self.delta_n % 2 != 0:
            raise ValueError("delta_n must be even and >= 2")
        if not self.band_mid[0] < self.band_mid[1]:
            raise ValueError("band_mid must be an increasing range")
        if self.band_mid[1] != self.band_high[0]:
            raise ValueError("band_high must start where band_mid ends")
        if not self.band_high[0] < self.band_high[1]:
            raise ValueError("band_high must be an increasing range")


@dataclass
class BinSet:
    """Selected (frame, bin) pairs with scores and band labels.

    Bins are ordered by descending score (selection order).  `is_high`
    marks membership of the high band; the rest belong to the middle band.
    """

    frames: np.ndarray
    bins: np.ndarray
    scores: np.ndarray
    is_high: np.ndarray

    def __len__(self):
        return len(self.frames)

    @property
    def mid_indices(self):
        return np.flatnonzero(~self.is_high)

    @property
    def high_indices(self):
        return np.flatnonzero(self.is_high)


def power_rate(envelope, n_t):
    """Rate of change of the power envelope against its recent history.

    Returns an array shaped like `envelope`; the first n_t frames have no
    history and are filled with -inf (excluded from candidacy).
    """
    p = np.asarray(envelope, dtype=float)
    if p.ndim != 2:
        raise ValueError("envelope must be (frames, bins)")
    if p.shape[0] <= n_t:
        raise ValueError("signal too short for onset statistics")
    csum = np.cumsum(p, axis=0)
    hist = (csum[n_t - 1:-1] - np.concatenate(
        [np.zeros((1, p.shape[1])), csum[:-n_t - 1]], axis=0)) / n_t
    delta = np.full_like(p, -np.inf)
    delta[n_t:] = p[n_t:] - hist
    return delta


def total_power(envelope):
    """Per-frame sum of the power envelope over all bins."""
    return np.asarray(envelope, dtype=float).sum(axis=1)


def detect_transients(frame_power, cfg: OnsetConfig):
    """Frames holding a short high-power event.

    A frame must be a local maximum of the total power and exceed both
    slope thresholds: somewhere within delta_n/2 frames the power climbed
    faster than v1 per frame before it and falls faster than v2 per frame
    after it.  Near the signal edges the slope search uses the frames that
    exist.
    """
    p = np.asarray(frame_power, dtype=float)
    half = cfg.delta_n // 2
    found = []
    for n in range(1, p.size - 1):
        if not (p[n + 1] - p[n] < 0 and p[n] - p[n - 1] > 0):
            continue
        back = np.arange(1, min(half, n) + 1)
        fwd = np.arange(1, min(half, p.size - 1 - n) + 1)
        uphill = np.max((p[n] - p[n - back]) / back)
        downhill = np.max((p[n] - p[n + fwd]) / fwd)
        if uphill > cfg.v1 and downhill > cfg.v2:
            found.append(n)
    return np.asarray(found, dtype=int)


def select_bins(rate, transients, cfg: OnsetConfig, bin_hz) -> BinSet:
    """Top-K rate-of-change bins, band-limited and transient-masked.

    Candidates are restricted to [band_mid lo, band_high hi]; any frame
    within delta_n/2 of a transient is removed before ranking.  Ties in
    the score are broken toward the earlier frame, then the lower bin.
    Band membership uses half-open intervals: a bin centred exactly on the
    band edge belongs to the high band.
    """
    rate = np.asarray(rate, dtype=float)
    num_frames, num_bins = rate.shape
    freqs = np.arange(num_bins) * float(bin_hz)
    in_band = (freqs >= cfg.band_mid[0]) & (freqs <= cfg.band_high[1])

    frame_ok = np.ones(num_frames, dtype=bool)
    half = cfg.delta_n // 2
    for nv in np.asarray(transients, dtype=int):
        frame_ok[max(0, nv - half):nv + half + 1] = False

    # frames without rate history carry -inf and fall out via isfinite
    eligible = frame_ok[:, None] & in_band[None, :] & np.isfinite(rate)
    cand = np.flatnonzero(eligible.ravel())
    if cand.size == 0:
        raise ValueError("no direct-path bins found")
    frames, bins = np.unravel_index(cand, rate.shape)
    scores = rate[frames, bins]
    k = cfg.k_select if cfg.k_select is not None else num_frames
    order = np.lexsort((bins, frames, -scores))[:k]
    frames, bins, scores = frames[order], bins[order], scores[order]
    is_high = freqs[bins] >= cfg.band_high[0]
    return BinSet(frames=frames, bins=bins, scores=scores, is_high=is_high)
