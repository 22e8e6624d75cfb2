"""End-to-end estimator: STFT, onset bin selection with transient
rejection, band split, bin-selective dereverberation, middle-band TDOA
fusion, and high-band refinement, behind a single estimate() entry point.
A full-band SRP-PHAT baseline shares the same interface.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dereverb import DereverbResult, WpeConfig, dereverberate_bins
from .doa import (
    RefineConfig,
    SteeringGrid,
    TdoaNeighborhoodConfig,
    fuse_mid_band,
    refine_high_band,
    srp_bin,
    srp_phat_baseline,
    theta_to_tdoa,
)
from .onset import BinSet, OnsetConfig, detect_transients, power_rate, select_bins, total_power
from .room import ArrayGeometry
from .stft import StftConfig, cross_power_envelope, log_compress, stft


class PipelineError(RuntimeError):
    """Stage failure wrapper so callers see where the pipeline stopped."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class PipelineConfig:
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry.linear)
    stft: StftConfig = field(default_factory=StftConfig)
    onset: OnsetConfig = field(default_factory=OnsetConfig)
    wpe: WpeConfig = field(default_factory=WpeConfig)
    neighborhood: TdoaNeighborhoodConfig = field(
        default_factory=TdoaNeighborhoodConfig)
    refine: RefineConfig = field(default_factory=RefineConfig)
    grid_deg: float = 1.0
    high_band_wpe: bool = True
    transient_elimination: bool = True

    def __post_init__(self):
        nyq = self.geometry.spatial_nyquist
        if self.onset.band_high[1] > nyq + 1e-6:
            raise ValueError(
                f"band_high upper edge {self.onset.band_high[1]:.1f} Hz "
                f"exceeds the spatial Nyquist {nyq:.1f} Hz")

    def make_grid(self):
        return SteeringGrid(self.geometry, self.stft.sample_rate,
                            self.stft.window_len, self.grid_deg)


@dataclass
class EstimateReport:
    theta: float
    method: str
    tau_mid: float | None = None
    num_selected: int = 0
    num_mid: int = 0
    num_high: int = 0
    transient_frames: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    histogram_counts: np.ndarray | None = None
    histogram_candidates: np.ndarray | None = None
    bins: BinSet | None = None
    mid_taus: np.ndarray | None = None


def _validate_input(audio, cfg):
    audio = np.asarray(audio, dtype=float)
    if audio.ndim != 2:
        raise ValueError("audio must be shaped (channels, samples)")
    if audio.shape[0] != cfg.geometry.num_mics:
        raise ValueError(
            f"channel-count mismatch: audio has {audio.shape[0]} channels, "
            f"geometry expects {cfg.geometry.num_mics}")
    if audio.shape[1] < cfg.stft.window_len:
        raise ValueError("audio shorter than one analysis window")
    frames = (audio.shape[1] - cfg.stft.window_len) // cfg.stft.frameshift + 1
    if frames <= cfg.onset.n_t:
        raise ValueError("audio too short for onset statistics")
    return audio


def _stage(timings, name):
    class _Timer:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        def __exit__(self, exc_type, exc, tb):
            timings[name] = time.perf_counter() - self.t0
            if exc is not None and not isinstance(exc, PipelineError):
                raise PipelineError(name, str(exc)) from exc
            return False

    return _Timer()


def estimate(audio, cfg: PipelineConfig, grid: SteeringGrid | None = None
             ) -> EstimateReport:
    """Run the full two-stage estimator on a multichannel capture."""
    audio = _validate_input(audio, cfg)
    timings: dict = {}
    warnings: list = []
    if grid is None:
        grid = cfg.make_grid()

    with _stage(timings, "stft"):
        spec = stft(audio, cfg.stft)

    with _stage(timings, "envelope"):
        envelope = log_compress(cross_power_envelope(spec), cfg.stft.xi)

    with _stage(timings, "transients"):
        if cfg.transient_elimination:
            transients = detect_transients(total_power(envelope), cfg.onset)
        else:
            transients = np.empty(0, dtype=int)

    with _stage(timings, "select"):
        rate = power_rate(envelope, cfg.onset.n_t)
        bins = select_bins(rate, transients, cfg.onset, spec.bin_hz)

    with _stage(timings, "dereverb"):
        vectors, fallback = _desired_vectors(spec, bins, cfg, warnings)

    with _stage(timings, "fuse_mid"):
        mid = bins.mid_indices
        if mid.size == 0:
            raise ValueError("no middle-band bins")
        mid_taus, mid_ks = _per_bin_tdoa(vectors, bins, mid, grid, cfg)
        fused = fuse_mid_band(mid_taus, mid_ks, cfg.neighborhood,
                              cfg.geometry, grid, bin_hz=spec.bin_hz)

    with _stage(timings, "refine_high"):
        high = bins.high_indices
        live = high[np.abs(vectors[high]).sum(axis=1) > 0]
        if live.size < high.size:
            warnings.append(f"dropped {high.size - live.size} silent high-band bins")
        refined = refine_high_band(vectors[live], bins.bins[live], fused.tau,
                                   grid, cfg.refine, cfg.geometry)
        if refined.used_fallback:
            warnings.append("high-band refinement fell back to the fused "
                            "middle-band estimate")

    return EstimateReport(
        theta=refined.theta, method="proposed", tau_mid=fused.tau,
        num_selected=len(bins), num_mid=int(mid.size), num_high=int(high.size),
        transient_frames=[int(t) for t in transients], warnings=warnings,
        timings=timings, histogram_counts=fused.counts,
        histogram_candidates=fused.candidates, bins=bins, mid_taus=mid_taus)


def _desired_vectors(spec, bins, cfg, warnings):
    """Dereverberated (or raw) snapshots for every selected bin."""
    if spec.num_frames <= cfg.wpe.history:
        warnings.append("audio too short for WPE history; using raw bins")
        vectors = spec.data[:, bins.frames, bins.bins].T
        return vectors, np.ones(len(bins), dtype=bool)
    if cfg.high_band_wpe:
        result = dereverberate_bins(spec, bins, cfg.wpe)
        if np.any(result.fallback):
            warnings.append(f"{int(result.fallback.sum())} bins lacked WPE "
                            "history; raw values used")
        return result.vectors, result.fallback
    # dereverberate only the middle band, keep raw high-band snapshots
    mid_mask = ~bins.is_high
    sub = BinSet(frames=bins.frames[mid_mask], bins=bins.bins[mid_mask],
                 scores=bins.scores[mid_mask],
                 is_high=bins.is_high[mid_mask])
    mid_result = dereverberate_bins(spec, sub, cfg.wpe)
    vectors = spec.data[:, bins.frames, bins.bins].T.copy()
    fallback = np.ones(len(bins), dtype=bool)
    mid_pos = np.flatnonzero(mid_mask)
    vectors[mid_pos] = mid_result.vectors
    fallback[mid_pos] = mid_result.fallback
    if np.any(mid_result.fallback):
        warnings.append(f"{int(mid_result.fallback.sum())} mid-band bins "
                        "lacked WPE history; raw values used")
    return vectors, fallback


def _per_bin_tdoa(vectors, bins, indices, grid, cfg):
    taus, ks = [], []
    for idx in indices:
        d = vectors[idx]
        if not np.any(d):
            continue
        theta = srp_bin(d, int(bins.bins[idx]), grid)
        taus.append(theta_to_tdoa(theta, cfg.geometry))
        ks.append(int(bins.bins[idx]))
    if not taus:
        raise ValueError("all middle-band bins are silent")
    return np.asarray(taus), np.asarray(ks)


def estimate_baseline(audio, cfg: PipelineConfig,
                      grid: SteeringGrid | None = None) -> EstimateReport:
    """Plain SRP-PHAT over every frame of the band above 1 kHz."""
    audio = _validate_input(audio, cfg)
    timings: dict = {}
    if grid is None:
        grid = cfg.make_grid()
    with _stage(timings, "stft"):
        spec = stft(audio, cfg.stft)
    with _stage(timings, "srp_phat"):
        band = (cfg.onset.band_mid[0], cfg.onset.band_high[1])
        theta = srp_phat_baseline(spec, grid, band)
    return EstimateReport(theta=theta, method="baseline", timings=timings)
