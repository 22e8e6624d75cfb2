"""Grid-search DOA estimation for uniform linear arrays.

Per-bin steered-response power, angle-to-TDOA conversion, quasi-histogram
fusion of middle-band estimates over frequency-dependent TDOA
neighbourhoods, Gaussian-weighted high-band refinement, and the full-band
SRP-PHAT baseline used for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .room import ArrayGeometry


@dataclass(frozen=True)
class TdoaNeighborhoodConfig:
    alpha: float = 8.0
    k_units: str = "bin"  # "bin": index into the DFT; "hz": bin centre frequency

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.k_units not in ("bin", "hz"):
            raise ValueError("k_units must be 'bin' or 'hz'")


@dataclass(frozen=True)
class RefineConfig:
    sigma: float = 1.0 / 15.0
    cutoff_sigmas: float = 3.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass
class FuseResult:
    tau: float
    counts: np.ndarray
    candidates: np.ndarray


@dataclass
class RefineResult:
    theta: float
    per_bin_tau: np.ndarray
    weights: np.ndarray
    used_fallback: bool


class SteeringGrid:
    """Steering vectors over a uniform angle grid, cached per frequency bin.

    Entry i of g(k, theta) is exp(-j * w_k * u_i * sin(theta) / c) with u_i
    the signed mic position along the array axis (array-centre origin) and
    w_k = 2*pi*k*fs/window_len.
    """

    def __init__(self, geometry: ArrayGeometry, sample_rate, window_len,
                 resolution_deg=1.0):
        if resolution_deg <= 0:
            raise ValueError("grid resolution must be positive")
        self.geometry = geometry
        self.sample_rate = float(sample_rate)
        self.window_len = int(window_len)
        self.resolution_deg = float(resolution_deg)
        n = int(round(180.0 / resolution_deg))
        self.angles = np.linspace(-90.0, 90.0, n + 1)
        self._offsets = geometry.offsets
        self._cache: dict = {}
        # rank used for tie-breaking: prefer small |angle|, then the
        # positive one, so argmax results are reproducible
        self._tie_rank = np.lexsort((-np.sign(self.angles),
                                     np.abs(self.angles)))

    def matrix(self, k):
        """(num_angles, num_mics) steering matrix for bin k."""
        k = int(k)
        got = self._cache.get(k)
        if got is None:
            omega = 2.0 * math.pi * k * self.sample_rate / self.window_len
            phase = (np.sin(np.radians(self.angles))[:, None]
                     * self._offsets[None, :]) * (omega / self.geometry.c)
            got = np.exp(-1j * phase)
            self._cache[k] = got
        return got

    def argmax(self, objective):
        """Index of the largest objective value, ties toward broadside."""
        best = np.max(objective)
        ties = np.flatnonzero(objective == best)
        if ties.size == 1:
            return int(ties[0])
        ranks = np.empty(self.angles.size, dtype=int)
        ranks[self._tie_rank] = np.arange(self.angles.size)
        return int(ties[np.argmin(ranks[ties])])


def steering_vector(k, theta_deg, geometry: ArrayGeometry, sample_rate,
                    window_len):
    """Steering vector for one (bin, angle) pair; see SteeringGrid."""
    if not -90.0 <= theta_deg <= 90.0:
        raise ValueError("theta must lie in [-90, 90] degrees")
    omega = 2.0 * math.pi * int(k) * float(sample_rate) / int(window_len)
    phase = omega * geometry.offsets * math.sin(math.radians(theta_deg)) / geometry.c
    return np.exp(-1j * phase)


def srp_bin(d_vec, k, grid: SteeringGrid):
    """Angle maximising the steered response power of one bin's snapshot.

    With the rank-one snapshot covariance D*D^H the quadratic form
    g^H S g reduces to |g^H D|^2.
    """
    d = np.asarray(d_vec)
    if not np.any(d):
        raise ValueError("silent bin")
    objective = np.abs(grid.matrix(k).conj() @ d) ** 2
    return float(grid.angles[grid.argmax(objective)])


def theta_to_tdoa(theta_deg, geometry: ArrayGeometry):
    """Adjacent-microphone delay u0*sin(theta)/c in seconds."""
    return geometry.u0 * math.sin(math.radians(theta_deg)) / geometry.c


def tdoa_to_theta(tau, geometry: ArrayGeometry):
    s = tau * geometry.c / geometry.u0
    return math.degrees(math.asin(min(1.0, max(-1.0, s))))


def tdoa_neighborhood(tau, k, cfg: TdoaNeighborhoodConfig,
                      geometry: ArrayGeometry, bin_hz=None):
    """Frequency-dependent acceptance interval around a candidate TDOA.

    The interval [tau - a*(u0/c + tau), tau + a*(u0/c - tau)] with
    a = alpha/k always contains tau, is wider at low frequencies, and leans
    toward broadside for off-centre tau.
    """
    if k <= 0:
        raise ValueError("bin index must be positive")
    scale = float(k)
    if cfg.k_units == "hz":
        if bin_hz is None:
            raise ValueError("bin_hz required for k_units='hz'")
        scale = float(k) * float(bin_hz)
    a = cfg.alpha / scale
    limit = geometry.u0 / geometry.c
    return tau - a * (limit + tau), tau + a * (limit - tau)


def fuse_mid_band(taus, ks, cfg: TdoaNeighborhoodConfig,
                  geometry: ArrayGeometry, grid: SteeringGrid,
                  bin_hz=None) -> FuseResult:
    """Vote per-bin TDOA estimates into candidate neighbourhoods.

    Candidates are the TDOA images of the angle grid.  Each estimate votes
    for every candidate whose neighbourhood (built at the estimate's own
    bin) contains it; the best-voted candidate wins, ties toward the
    smaller |tau|.
    """
    taus = np.asarray(taus, dtype=float)
    ks = np.asarray(ks)
    if taus.size == 0:
        raise ValueError("no middle-band bins")
    scale = ks.astype(float)
    if cfg.k_units == "hz":
        if bin_hz is None:
            raise ValueError("bin_hz required for k_units='hz'")
        scale = scale * float(bin_hz)
    a = cfg.alpha / scale  # per-estimate width factor
    limit = geometry.u0 / geometry.c
    candidates = np.array([theta_to_tdoa(t, geometry) for t in grid.angles])
    lo = candidates[:, None] - a[None, :] * (limit + candidates[:, None])
    hi = candidates[:, None] + a[None, :] * (limit - candidates[:, None])
    votes = (taus[None, :] >= lo) & (taus[None, :] <= hi)
    counts = votes.sum(axis=1)
    best = grid.argmax(counts)
    return FuseResult(tau=float(candidates[best]), counts=counts,
                      candidates=candidates)


def gaussian_weight(tau_h, tau_m, cfg: RefineConfig, geometry: ArrayGeometry):
    """Closeness weight between a high-band TDOA and the fused estimate.

    Operates on the dimensionless offset z = (tau_h - tau_m) * c / (2*u0);
    zero beyond cutoff_sigmas * sigma.
    """
    z = (tau_h - tau_m) * geometry.c / (2.0 * geometry.u0)
    if abs(z) > cfg.cutoff_sigmas * cfg.sigma:
        return 0.0
    return math.exp(-z * z / (2.0 * cfg.sigma ** 2)) / (2.0 * math.pi * cfg.sigma)


def refine_high_band(vectors, ks, tau_mid, grid: SteeringGrid,
                     cfg: RefineConfig, geometry: ArrayGeometry) -> RefineResult:
    """Weighted SRP-PHAT over high-band bins around the fused TDOA.

    Each bin contributes W * |g^H D|^2 / (D^H D); if no bin survives the
    Gaussian cutoff (or the set is empty) the fused TDOA's angle is
    returned with the fallback flag set.
    """
    vectors = np.asarray(vectors)
    ks = np.asarray(ks)
    fallback_theta = tdoa_to_theta(tau_mid, geometry)
    if vectors.size == 0:
        return RefineResult(theta=fallback_theta, per_bin_tau=np.empty(0),
                            weights=np.empty(0), used_fallback=True)
    taus = np.array([theta_to_tdoa(srp_bin(vectors[j], ks[j], grid), geometry)
                     for j in range(len(ks))])
    weights = np.array([gaussian_weight(t, tau_mid, cfg, geometry)
                        for t in taus])
    if not np.any(weights > 0):
        return RefineResult(theta=fallback_theta, per_bin_tau=taus,
                            weights=weights, used_fallback=True)
    objective = np.zeros(grid.angles.size)
    for k in np.unique(ks):
        sel = np.flatnonzero((ks == k) & (weights > 0))
        if sel.size == 0:
            continue
        d = vectors[sel].T  # (I, m)
        power = np.sum(np.abs(d) ** 2, axis=0)
        response = np.abs(grid.matrix(k).conj() @ d) ** 2
        objective += response @ (weights[sel] / power)
    theta = float(grid.angles[grid.argmax(objective)])
    return RefineResult(theta=theta, per_bin_tau=taus, weights=weights,
                        used_fallback=False)


def srp_phat_baseline(spec, grid: SteeringGrid, band=None):
    """Full-band SRP-PHAT over every frame: argmax of the summed
    phase-normalised steered response.  `band` is an (lo, hi) Hz pair and
    defaults to [1000 Hz, spatial Nyquist]."""
    lo, hi = band if band is not None else (1000.0, grid.geometry.spatial_nyquist)
    freqs = np.arange(spec.num_bins) * spec.bin_hz
    bins = np.flatnonzero((freqs >= lo) & (freqs <= hi))
    if bins.size == 0:
        raise ValueError("baseline band contains no bins")
    objective = np.zeros(grid.angles.size)
    for k in bins:
        x = spec.data[:, :, k]  # (I, N)
        power = np.sum(np.abs(x) ** 2, axis=0)
        live = power > 0
        if not np.any(live):
            continue
        xn = x[:, live] / np.sqrt(power[live])[None, :]
        s = xn @ xn.conj().T
        g = grid.matrix(int(k))
        objective += np.einsum("ai,ij,aj->a", g.conj(), s, g).real
    return float(grid.angles[grid.argmax(objective)])
