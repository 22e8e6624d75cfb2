"""Synthetic test material: speech-like utterances, interference beds, and
clicks.  Everything is generated from a seeded RNG so suites are exactly
reproducible.

The speech surrogate is built for onset-based processing: clear syllable
attacks (15-35 ms), sustained voiced bodies with formant structure, and
fricative bursts so both the 1-2 kHz and 2-5 kHz bands carry energy.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter


def _rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def _resonator(freq, bandwidth, sample_rate):
    """Two-pole resonator coefficients."""
    r = np.exp(-np.pi * bandwidth / sample_rate)
    theta = 2.0 * np.pi * freq / sample_rate
    return [1.0 - r], [1.0, -2.0 * r * np.cos(theta), r * r]


def _envelope(n, attack, release, sample_rate):
    """Raised-cosine attack/release around a sustained body."""
    a = min(int(attack * sample_rate), n // 2)
    r = min(int(release * sample_rate), n - a)
    env = np.ones(n)
    if a > 0:
        env[:a] = 0.5 * (1.0 - np.cos(np.pi * np.arange(a) / a))
    if r > 0:
        env[n - r:] = 0.5 * (1.0 + np.cos(np.pi * np.arange(r) / r))
    return env


def _voiced(n, rng, sample_rate):
    f0 = rng.uniform(95.0, 230.0)
    drift = rng.uniform(-0.15, 0.15)
    t = np.arange(n) / sample_rate
    inst = f0 * (1.0 + drift * t / max(t[-1], 1e-6))
    phase = np.cumsum(inst) / sample_rate
    # impulse train at the pitch rate
    exc = np.zeros(n)
    exc[np.diff(np.floor(phase), prepend=0.0) > 0] = 1.0
    exc += 0.05 * rng.standard_normal(n)  # glottal noise
    out = np.zeros(n)
    formants = [
        (rng.uniform(300, 900), rng.uniform(60, 120), 1.0),
        (rng.uniform(900, 2400), rng.uniform(80, 160), 0.8),
        (rng.uniform(2400, 3400), rng.uniform(120, 240), 0.6),
    ]
    for freq, bw, gain in formants:
        b, a = _resonator(freq, bw, sample_rate)
        out += gain * lfilter(b, a, exc)
    # aspiration keeps the high band alive even for low-pitched voices
    b, a = _resonator(rng.uniform(3000, 4600), 900.0, sample_rate)
    out += 0.25 * lfilter(b, a, rng.standard_normal(n))
    return out


def _fricative(n, rng, sample_rate):
    b, a = _resonator(rng.uniform(2000, 4600), rng.uniform(600, 1200),
                      sample_rate)
    return lfilter(b, a, rng.standard_normal(n))


def synth_speech(duration, sample_rate=16000.0, seed=0, lead_silence=0.25,
                 tail_silence=0.2):
    """Speech-like utterance: syllable train with sharp but natural onsets."""
    rng = _rng(seed)
    total = int(duration * sample_rate)
    out = np.zeros(total)
    cursor = int(lead_silence * sample_rate)
    limit = total - int(tail_silence * sample_rate)
    while cursor < limit:
        length = int(rng.uniform(0.12, 0.32) * sample_rate)
        length = min(length, limit - cursor)
        if length < int(0.06 * sample_rate):
            break
        voiced = rng.uniform() < 0.7
        seg = _voiced(length, rng, sample_rate) if voiced else \
            _fricative(length, rng, sample_rate)
        seg *= _envelope(length, rng.uniform(0.015, 0.035),
                         rng.uniform(0.04, 0.09), sample_rate)
        seg *= rng.uniform(0.6, 1.0)
        out[cursor:cursor + length] += seg
        cursor += length + int(rng.uniform(0.06, 0.25) * sample_rate)
    peak = np.max(np.abs(out))
    if peak > 0:
        out *= 0.5 / peak
    return out


def synth_click(sample_rate=16000.0, width=0.003, seed=0):
    """Broadband transient: a few milliseconds of decaying noise."""
    rng = _rng(seed)
    n = max(int(width * sample_rate), 8)
    click = rng.standard_normal(n) * np.exp(-np.arange(n) / (0.25 * n))
    click[0] = 1.0
    return click / np.max(np.abs(click))


def add_click(signal, at_seconds, sample_rate=16000.0, amplitude=1.0, seed=0):
    """Insert a click into a copy of `signal` at the given time."""
    out = np.array(signal, dtype=float, copy=True)
    click = amplitude * synth_click(sample_rate, seed=seed)
    start = int(at_seconds * sample_rate)
    stop = min(start + click.size, out.size)
    if start >= out.size:
        raise ValueError("click start beyond signal end")
    out[start:stop] += click[:stop - start]
    return out


def synth_interference(kind, duration, sample_rate=16000.0, seed=0):
    """Continuous interference bed of the requested kind.

    Kinds: "fan" (low-passed steady noise), "noise" (white), "babble"
    (overlapping speech surrogates), "music" (note sequence), "clicks"
    (steady bed plus sparse transients).
    """
    rng = _rng(seed)
    n = int(duration * sample_rate)
    if kind == "fan":
        b, a = _resonator(rng.uniform(150, 400), 500.0, sample_rate)
        out = lfilter(b, a, rng.standard_normal(n))
    elif kind == "noise":
        out = rng.standard_normal(n)
    elif kind == "babble":
        out = np.zeros(n)
        for _ in range(4):
            out += synth_speech(duration, sample_rate,
                                seed=rng.integers(1 << 31),
                                lead_silence=rng.uniform(0.0, 0.3),
                                tail_silence=0.0)
    elif kind == "music":
        out = np.zeros(n)
        cursor = 0
        scale = 220.0 * 2.0 ** (np.arange(12) / 12.0)
        while cursor < n:
            length = min(int(rng.uniform(0.2, 0.4) * sample_rate), n - cursor)
            freq = float(rng.choice(scale)) * rng.choice([1, 2, 4, 8])
            t = np.arange(length) / sample_rate
            note = np.sin(2 * np.pi * freq * t)
            note += 0.4 * np.sin(2 * np.pi * 2 * freq * t)
            note *= _envelope(length, 0.03, 0.08, sample_rate)
            out[cursor:cursor + length] += note
            cursor += length
    elif kind == "clicks":
        b, a = _resonator(rng.uniform(400, 900), 700.0, sample_rate)
        out = 0.3 * lfilter(b, a, rng.standard_normal(n))
        hop = int(rng.uniform(0.5, 0.9) * sample_rate)
        for start in range(hop, n - 100, hop):
            click = synth_click(sample_rate, seed=rng.integers(1 << 31))
            out[start:start + click.size] += 3.0 * click
    else:
        raise ValueError(f"unknown interference kind {kind!r}")
    peak = np.max(np.abs(out))
    if peak > 0:
        out = 0.5 * out / peak
    return out
