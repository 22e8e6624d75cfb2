"""WAV input/output for multichannel captures.

PCM integer files are scaled to [-1, 1] by their type range; float files
pass through.  No resampling: a rate mismatch against the configuration is
an error.
"""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile

_INT_SCALES = {
    np.dtype(np.int16): 32768.0,
    np.dtype(np.int32): 2147483648.0,
}


def load_audio(path, expected_rate=None, expected_channels=None):
    """Read a WAV file into a (channels, samples) float array in [-1, 1]."""
    rate, data = wavfile.read(path)
    if data.dtype in _INT_SCALES:
        data = data.astype(float) / _INT_SCALES[data.dtype]
    elif data.dtype == np.uint8:
        data = (data.astype(float) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        data = data.astype(float)
    else:
        raise ValueError(f"unsupported WAV encoding {data.dtype}")
    if data.ndim == 1:
        data = data[None, :]
    else:
        data = data.T  # scipy stores (samples, channels)
    if expected_rate is not None and rate != expected_rate:
        raise ValueError(f"sample-rate mismatch: file {rate} Hz, "
                         f"expected {expected_rate} Hz")
    if expected_channels is not None and data.shape[0] != expected_channels:
        raise ValueError(f"channel-count mismatch: file has {data.shape[0]} "
                         f"channels, expected {expected_channels}")
    return data, float(rate)


def save_wav(path, data, sample_rate, dtype="float32"):
    """Write (channels, samples) or mono data as 16-bit PCM or 32-bit float."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 2:
        arr = arr.T
    if dtype == "float32":
        wavfile.write(path, int(sample_rate), arr.astype(np.float32))
    elif dtype == "int16":
        clipped = np.clip(arr, -1.0, 1.0 - 1.0 / 32768.0)
        wavfile.write(path, int(sample_rate),
                      np.round(clipped * 32768.0).astype(np.int16))
    else:
        raise ValueError(f"unsupported output dtype {dtype!r}")
