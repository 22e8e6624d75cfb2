"""Configuration and recipe files.

The pipeline configuration is a flat YAML mapping whose keys follow the
conventional parameter names (window_width, frameshift, xi, n_t, p,
k_select, v1, v2, delta_n, eps, alpha, sigma, band_mid, band_high) plus an
`array` section.  Suite recipes declare a room, a shared default, and a
trial list; a seed makes every generated signal reproducible.
"""

from __future__ import annotations

import dataclasses

import yaml

from .dereverb import WpeConfig
from .doa import RefineConfig, TdoaNeighborhoodConfig
from .evaluate import TrialSpec
from .onset import OnsetConfig
from .pipeline import PipelineConfig
from .room import ArrayGeometry, RoomSpec
from .stft import StftConfig


def default_config() -> PipelineConfig:
    return PipelineConfig()


def config_to_dict(cfg: PipelineConfig) -> dict:
    return {
        "sample_rate": cfg.stft.sample_rate,
        "window_width": cfg.stft.window_len,
        "frameshift": cfg.stft.frameshift,
        "window_kind": cfg.stft.window_kind,
        "xi": cfg.stft.xi,
        "n_t": cfg.onset.n_t,
        "k_select": cfg.onset.k_select,
        "v1": cfg.onset.v1,
        "v2": cfg.onset.v2,
        "delta_n": cfg.onset.delta_n,
        "band_mid": list(cfg.onset.band_mid),
        "band_high": list(cfg.onset.band_high),
        "p": cfg.wpe.p,
        "order_l": cfg.wpe.order_l,
        "delay_d": cfg.wpe.delay,
        "eps": cfg.wpe.floor_eps,
        "max_iters": cfg.wpe.max_iters,
        "alpha": cfg.neighborhood.alpha,
        "k_units": cfg.neighborhood.k_units,
        "sigma": cfg.refine.sigma,
        "grid_deg": cfg.grid_deg,
        "high_band_wpe": cfg.high_band_wpe,
        "transient_elimination": cfg.transient_elimination,
        "array": {
            "num_mics": cfg.geometry.num_mics,
            "spacing": cfg.geometry.u0,
            "c": cfg.geometry.c,
            "center": list(cfg.geometry.center),
            "axis": list(cfg.geometry.axis),
        },
    }


def config_from_dict(data: dict | None) -> PipelineConfig:
    data = dict(data or {})
    arr = data.pop("array", {}) or {}
    geometry = ArrayGeometry.linear(
        num_mics=int(arr.get("num_mics", 4)),
        spacing=float(arr.get("spacing", 0.035)),
        center=tuple(arr.get("center", (0.0, 0.0, 0.0))),
        axis=tuple(arr.get("axis", (1.0, 0.0, 0.0))),
        c=float(arr.get("c", 344.0)))

    stft_kw, onset_kw, wpe_kw, hood_kw, refine_kw, top_kw = \
        {}, {}, {}, {}, {}, {}
    mapping = {
        "sample_rate": (stft_kw, "sample_rate", float),
        "window_width": (stft_kw, "window_len", int),
        "frameshift": (stft_kw, "frameshift", int),
        "window_kind": (stft_kw, "window_kind", str),
        "xi": (stft_kw, "xi", float),
        "n_t": (onset_kw, "n_t", int),
        "k_select": (onset_kw, "k_select",
                     lambda v: None if v is None else int(v)),
        "v1": (onset_kw, "v1", float),
        "v2": (onset_kw, "v2", float),
        "delta_n": (onset_kw, "delta_n", int),
        "band_mid": (onset_kw, "band_mid", lambda v: tuple(map(float, v))),
        "band_high": (onset_kw, "band_high", lambda v: tuple(map(float, v))),
        "p": (wpe_kw, "p", int),
        "order_l": (wpe_kw, "order_l", int),
        "delay_d": (wpe_kw, "delay_d",
                    lambda v: None if v is None else int(v)),
        "eps": (wpe_kw, "floor_eps", float),
        "max_iters": (wpe_kw, "max_iters", int),
        "reg": (wpe_kw, "reg", float),
        "converge_tol": (wpe_kw, "converge_tol", float),
        "alpha": (hood_kw, "alpha", float),
        "k_units": (hood_kw, "k_units", str),
        "sigma": (refine_kw, "sigma", float),
        "grid_deg": (top_kw, "grid_deg", float),
        "high_band_wpe": (top_kw, "high_band_wpe", bool),
        "transient_elimination": (top_kw, "transient_elimination", bool),
    }
    for key, value in data.items():
        if key not in mapping:
            raise ValueError(f"unknown configuration key {key!r}")
        target, name, cast = mapping[key]
        target[name] = cast(value)

    # the default high-band edge tracks the geometry's spatial Nyquist
    if "band_high" not in data:
        mid = onset_kw.get("band_mid", OnsetConfig().band_mid)
        onset_kw["band_high"] = (mid[1], geometry.spatial_nyquist)

    return PipelineConfig(
        geometry=geometry,
        stft=StftConfig(**stft_kw),
        onset=dataclasses.replace(OnsetConfig(), **onset_kw),
        wpe=WpeConfig(**wpe_kw),
        neighborhood=TdoaNeighborhoodConfig(**hood_kw),
        refine=RefineConfig(**refine_kw),
        **top_kw)


def load_config(path) -> PipelineConfig:
    with open(path) as fh:
        return config_from_dict(yaml.safe_load(fh) or {})


def _room_from_dict(data: dict | None, sample_rate) -> RoomSpec | None:
    if not data:
        return None
    dims = tuple(map(float, data["dimensions"]))
    if "t60" in data and data.get("t60"):
        return RoomSpec.from_t60(dims, float(data["t60"]),
                                 sample_rate=sample_rate,
                                 formula=data.get("formula", "matched"))
    if "reflection_coeffs" in data:
        return RoomSpec(dims, tuple(map(float, data["reflection_coeffs"])),
                        sample_rate=sample_rate)
    return RoomSpec.anechoic(dims, sample_rate=sample_rate)


@dataclasses.dataclass
class SuiteRecipe:
    trials: list
    config: PipelineConfig
    seed: int = 0


def recipe_from_dict(data: dict) -> SuiteRecipe:
    cfg = config_from_dict(data.get("config"))
    seed = int(data.get("seed", 0))
    room = _room_from_dict(data.get("room"), cfg.stft.sample_rate)
    distance = float(data.get("source_distance", 2.0))
    trials = []
    for i, entry in enumerate(data.get("trials", [])):
        utt = entry.get("utterance", {}) or {}
        interf = entry.get("interference")
        click = entry.get("click")
        trial_room = _room_from_dict(entry.get("room"),
                                     cfg.stft.sample_rate) or room
        trials.append(TrialSpec(
            target_angle=float(entry["target_angle"]),
            room=trial_room,
            wav_path=entry.get("wav"),
            utterance_seed=int(utt.get("seed", seed + i)),
            duration=float(utt.get("duration", 2.0)),
            distance=float(entry.get("distance", distance)),
            interference_kind=interf.get("kind") if interf else None,
            interference_angle=float(interf["angle"]) if interf else None,
            sir_db=float(interf["sir_db"]) if interf else None,
            interference_seed=int(interf.get("seed", seed + 100 + i))
            if interf else 1,
            click_time=float(click["time"]) if click else None,
            click_angle=float(click["angle"]) if click else None,
            click_amplitude=float(click.get("amplitude", 2.0))
            if click else 2.0,
        ))
    if not trials:
        raise ValueError("recipe declares no trials")
    return SuiteRecipe(trials=trials, config=cfg, seed=seed)


def load_recipe(path) -> SuiteRecipe:
    with open(path) as fh:
        return recipe_from_dict(yaml.safe_load(fh) or {})
