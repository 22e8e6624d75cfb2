"""Bin-selective dereverberation by multichannel linear prediction.

A variance-weighted prediction filter estimates the late reverberation of
each (channel, frequency) stream from stacked past frames spaced by the
coarse-to-fine frameshift ratio, and subtracts it.  Solves run only at the
frequencies present in the selected bin set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .onset import BinSet
from .stft import MultichannelSpectrogram


@dataclass(frozen=True)
class WpeConfig:
    p: int = 32
    order_l: int = 8
    delay_d: int | None = None  # None: 2*p, two coarse frames
    floor_eps: float = 1e-4
    max_iters: int = 3
    reg: float = 1e-8
    converge_tol: float = 1e-4
    variance_floor_mode: str = "epsilon"  # or "cost": floor by the scalar cost

    def __post_init__(self):
        if self.p < 1 or self.order_l < 1 or self.max_iters < 1:
            raise ValueError("p, order_l and max_iters must be at least 1")
        if self.delay_d is not None and self.delay_d < self.p:
            raise ValueError("delay_d must be at least p")
        if self.floor_eps <= 0:
            raise ValueError("floor_eps must be positive")
        if self.variance_floor_mode not in ("epsilon", "cost"):
            raise ValueError("variance_floor_mode must be 'epsilon' or 'cost'")

    @property
    def delay(self):
        return self.delay_d if self.delay_d is not None else 2 * self.p

    @property
    def history(self):
        """First frame index with a full predictor stack behind it."""
        return self.delay + (self.order_l - 1) * self.p


@dataclass
class WpeResult:
    """Per-(channel, bin) solve output.

    `cost_trace` holds one (before, after) pair per iteration, both
    evaluated with the variances used for that filter update, so the
    weighted-least-squares monotonicity is directly checkable.
    """

    desired: np.ndarray
    filter: np.ndarray
    cost_trace: list
    variances: np.ndarray
    iterations: int


@dataclass
class DereverbResult:
    vectors: np.ndarray  # (num_selected, channels) desired-signal snapshots
    fallback: np.ndarray  # True where the bin had no WPE history


def stack_predictor(spec: MultichannelSpectrogram, n, k, cfg: WpeConfig):
    """Stacked predictor [x_1(n,k)..x_I(n,k), x_1(n-p,k).., ...], length I*L."""
    if n - (cfg.order_l - 1) * cfg.p < 0:
        raise ValueError("bin too early for WPE context")
    lags = n - np.arange(cfg.order_l) * cfg.p
    return spec.data[:, lags, k].T.reshape(-1)


def _stack_all(spec, frames, k, cfg):
    """(I*L, len(frames)) predictor matrix at (frames - delay)."""
    i = spec.num_channels
    out = np.empty((i * cfg.order_l, len(frames)), dtype=complex)
    base = np.asarray(frames) - cfg.delay
    for tap in range(cfg.order_l):
        out[tap * i:(tap + 1) * i] = spec.data[:, base - tap * cfg.p, k]
    return out


def wpe_iterate(spec: MultichannelSpectrogram, channel, k, frames,
                cfg: WpeConfig) -> WpeResult:
    """Iterative variance-weighted prediction for one channel at one bin.

    Variances start at max(|x|^2, floor); each round solves the weighted
    normal equations through a Tikhonov-regularised Hermitian solve,
    subtracts the prediction, and refreshes the variances from the new
    residual.  Stops at max_iters or when the relative cost improvement
    falls below converge_tol.
    """
    frames = np.asarray(frames, dtype=int)
    if frames.size == 0:
        raise ValueError("no frames to dereverberate")
    if np.min(frames) < cfg.history:
        raise ValueError("bin too early for WPE context")
    target = spec.data[channel, frames, k]
    past = _stack_all(spec, frames, k, cfg)
    dim = past.shape[0]

    variances = np.maximum(np.abs(target) ** 2, cfg.floor_eps)
    weights = 1.0 / variances
    filt = np.zeros(dim, dtype=complex)
    desired = target.copy()
    trace = []
    iterations = 0
    for _ in range(cfg.max_iters):
        cost_before = float(np.sum(np.abs(desired) ** 2 * weights))
        weighted = past * weights[None, :]
        gram = weighted @ past.conj().T
        scale = np.trace(gram).real
        if scale <= 0:
            # silent bin: nothing to predict from
            trace.append((cost_before, cost_before))
            iterations += 1
            break
        rhs = weighted @ target.conj()
        try:
            filt = np.linalg.solve(
                gram + (cfg.reg * scale / dim) * np.eye(dim), rhs)
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                f"singular WPE normal matrix at channel {channel}, bin {k}"
            ) from exc
        desired = target - filt.conj() @ past
        cost_after = float(np.sum(np.abs(desired) ** 2 * weights))
        trace.append((cost_before, cost_after))
        iterations += 1
        if cfg.variance_floor_mode == "cost":
            variances = np.maximum(np.abs(desired) ** 2, cost_after)
        else:
            variances = np.maximum(np.abs(desired) ** 2, cfg.floor_eps)
        weights = 1.0 / variances
        if cost_before > 0 and abs(cost_before - cost_after) < (
                cfg.converge_tol * cost_before):
            break
    return WpeResult(desired=desired, filter=filt, cost_trace=trace,
                     variances=variances, iterations=iterations)


def dereverberate_bins(spec: MultichannelSpectrogram, bins: BinSet,
                       cfg: WpeConfig) -> DereverbResult:
    """Desired-signal snapshots for every selected bin.

    One solve per distinct frequency, per channel, over all frames with
    predictor history; the requested frames are then extracted.  Selected
    bins earlier than the history requirement keep the raw observation and
    are flagged.
    """
    count = len(bins)
    vectors = np.empty((count, spec.num_channels), dtype=complex)
    fallback = np.zeros(count, dtype=bool)
    if count == 0:
        return DereverbResult(vectors=vectors, fallback=fallback)

    start = cfg.history
    frames_all = np.arange(start, spec.num_frames)
    for k in np.unique(bins.bins):
        sel = np.flatnonzero(bins.bins == k)
        early = bins.frames[sel] < start
        for idx in sel[early]:
            vectors[idx] = spec.data[:, bins.frames[idx], k]
            fallback[idx] = True
        late = sel[~early]
        if late.size == 0:
            continue
        if frames_all.size == 0:
            for idx in late:
                vectors[idx] = spec.data[:, bins.frames[idx], k]
                fallback[idx] = True
            continue
        for ch in range(spec.num_channels):
            result = wpe_iterate(spec, ch, int(k), frames_all, cfg)
            positions = bins.frames[late] - start
            vectors[late, ch] = result.desired[positions]
    return DereverbResult(vectors=vectors, fallback=fallback)
