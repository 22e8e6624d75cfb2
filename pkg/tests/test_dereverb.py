import numpy as np
import pytest

import doakit.dereverb as dereverb_mod
from doakit.dereverb import (
    WpeConfig,
    dereverberate_bins,
    stack_predictor,
    wpe_iterate,
)
from doakit.onset import BinSet
from doakit.stft import MultichannelSpectrogram


def make_spec(data):
    return MultichannelSpectrogram(data=np.asarray(data, dtype=complex),
                                   sample_rate=16000.0, window_len=512,
                                   frameshift=8)


def complex_noise(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape)
                    + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def recursive_echo(rng, n, gain, delay, scale=1.0):
    """x(n) = s(n) + gain * x(n - delay); the one-tap optimum is `gain`."""
    s = complex_noise(rng, n, scale)
    x = np.zeros(n, dtype=complex)
    for i in range(n):
        x[i] = s[i] + (gain * x[i - delay] if i >= delay else 0.0)
    return x, s


class TestConfig:
    def test_defaults(self):
        cfg = WpeConfig()
        assert cfg.delay == 64  # 2p
        assert cfg.history == 64 + 7 * 32

    def test_invariants(self):
        with pytest.raises(ValueError):
            WpeConfig(p=0)
        with pytest.raises(ValueError):
            WpeConfig(delay_d=10, p=32)  # delay below p
        with pytest.raises(ValueError):
            WpeConfig(floor_eps=0.0)
        with pytest.raises(ValueError):
            WpeConfig(variance_floor_mode="bogus")


class TestStackPredictor:
    def test_single_lag(self, rng):
        data = complex_noise(rng, (3, 10, 2))
        spec = make_spec(data)
        got = stack_predictor(spec, 5, 1, WpeConfig(p=2, order_l=1))
        np.testing.assert_allclose(got, data[:, 5, 1])

    def test_two_lags_channel_major(self, rng):
        data = complex_noise(rng, (2, 80, 3))
        spec = make_spec(data)
        got = stack_predictor(spec, 40, 2, WpeConfig(p=32, order_l=2))
        expected = np.array([data[0, 40, 2], data[1, 40, 2],
                             data[0, 8, 2], data[1, 8, 2]])
        np.testing.assert_allclose(got, expected)
        assert got.size == 4

    def test_zero_spectrogram(self):
        spec = make_spec(np.zeros((2, 20, 2)))
        assert not np.any(stack_predictor(spec, 10, 0, WpeConfig(p=4, order_l=2)))

    def test_history_error(self, rng):
        spec = make_spec(complex_noise(rng, (2, 20, 2)))
        with pytest.raises(ValueError, match="too early"):
            stack_predictor(spec, 3, 0, WpeConfig(p=4, order_l=2))


class TestWpeIterate:
    def test_white_input_leaves_signal_alone(self, rng):
        # frames are independent: nothing to predict, d stays close to x
        data = complex_noise(rng, (2, 1500, 1))
        spec = make_spec(data)
        cfg = WpeConfig(p=2, order_l=2, delay_d=2, max_iters=3)
        frames = np.arange(cfg.history, 1500)
        res = wpe_iterate(spec, 0, 0, frames, cfg)
        x = data[0, frames, 0]
        assert np.linalg.norm(res.filter) < 0.15
        assert np.linalg.norm(res.desired - x) / np.linalg.norm(x) < 0.1

    def test_recursive_echo_recovery(self, rng):
        # low scale keeps the variances at the floor, so the weighted
        # solve reduces to least squares whose optimum is the echo gain
        x, _ = recursive_echo(rng, 3000, 0.8, 4, scale=1e-3)
        spec = make_spec(x[None, :, None])
        cfg = WpeConfig(p=1, order_l=1, delay_d=4, max_iters=5)
        res = wpe_iterate(spec, 0, 0, np.arange(cfg.history, 3000), cfg)
        assert abs(res.filter[0] - 0.8) < 0.05

    def test_zero_input(self):
        spec = make_spec(np.zeros((1, 100, 1)))
        cfg = WpeConfig(p=1, order_l=1, delay_d=2, max_iters=3)
        res = wpe_iterate(spec, 0, 0, np.arange(cfg.history, 100), cfg)
        assert not np.any(res.desired)
        assert not np.any(res.filter)
        assert res.cost_trace[0] == (0.0, 0.0)

    def test_cost_pairs_non_increasing(self, rng):
        x, _ = recursive_echo(rng, 2000, 0.7, 3)
        x *= 1.0 + 0.8 * np.sin(np.arange(2000) / 50.0)  # non-stationary
        spec = make_spec(x[None, :, None])
        cfg = WpeConfig(p=1, order_l=2, delay_d=3, max_iters=6)
        res = wpe_iterate(spec, 0, 0, np.arange(cfg.history, 2000), cfg)
        for before, after in res.cost_trace:
            assert after <= before * (1.0 + 1e-9)

    def test_reconstruction_identity(self, rng):
        # d + w^H x(n-D) equals x exactly
        data = complex_noise(rng, (2, 600, 2))
        spec = make_spec(data)
        cfg = WpeConfig(p=4, order_l=3, delay_d=8, max_iters=2)
        frames = np.arange(cfg.history, 600)
        res = wpe_iterate(spec, 1, 1, frames, cfg)
        past = np.stack([stack_predictor(spec, n - cfg.delay, 1, cfg)
                         for n in frames], axis=1)
        recon = res.desired + res.filter.conj() @ past
        np.testing.assert_allclose(recon, data[1, frames, 1], atol=1e-12)

    def test_variance_floor_everywhere(self, rng):
        x, _ = recursive_echo(rng, 1200, 0.6, 2, scale=1e-4)
        spec = make_spec(x[None, :, None])
        cfg = WpeConfig(p=1, order_l=1, delay_d=2, max_iters=4,
                        floor_eps=1e-4)
        res = wpe_iterate(spec, 0, 0, np.arange(cfg.history, 1200), cfg)
        assert np.all(res.variances >= cfg.floor_eps)

    def test_scale_equivariance(self, rng):
        data = complex_noise(rng, (1, 900, 1))
        data[0, :, 0], _ = recursive_echo(rng, 900, 0.5, 2)
        cfg = WpeConfig(p=1, order_l=1, delay_d=2, max_iters=3, reg=0.0)
        frames = np.arange(cfg.history, 900)
        base = wpe_iterate(make_spec(data), 0, 0, frames, cfg)
        a = 2.5 - 1.5j
        scaled = wpe_iterate(make_spec(a * data), 0, 0, frames, cfg)
        np.testing.assert_allclose(scaled.filter, base.filter, rtol=1e-6)
        np.testing.assert_allclose(scaled.desired, a * base.desired,
                                   rtol=1e-6)

    def test_cost_floor_mode_runs(self, rng):
        x, _ = recursive_echo(rng, 800, 0.6, 2)
        spec = make_spec(x[None, :, None])
        cfg = WpeConfig(p=1, order_l=1, delay_d=2, max_iters=3,
                        variance_floor_mode="cost")
        res = wpe_iterate(spec, 0, 0, np.arange(cfg.history, 800), cfg)
        assert res.iterations >= 1


class TestDereverberateBins:
    def make_binset(self, frames, bins):
        frames = np.asarray(frames)
        bins = np.asarray(bins)
        return BinSet(frames=frames, bins=bins,
                      scores=np.zeros(frames.size),
                      is_high=np.zeros(frames.size, dtype=bool))

    def test_empty(self, rng):
        spec = make_spec(complex_noise(rng, (2, 50, 3)))
        res = dereverberate_bins(spec, self.make_binset([], []), WpeConfig())
        assert res.vectors.shape == (0, 2)

    def test_shared_frequency_solved_once(self, rng, monkeypatch):
        data = complex_noise(rng, (2, 300, 4))
        spec = make_spec(data)
        cfg = WpeConfig(p=2, order_l=2, delay_d=4, max_iters=2)
        calls = []
        original = dereverb_mod.wpe_iterate

        def counting(spec_, ch, k, frames, cfg_):
            calls.append((ch, k))
            return original(spec_, ch, k, frames, cfg_)

        monkeypatch.setattr(dereverb_mod, "wpe_iterate", counting)
        binset = self.make_binset([100, 200], [3, 3])
        res = dereverberate_bins(spec, binset, cfg)
        assert sorted(calls) == [(0, 3), (1, 3)]  # one solve per channel
        assert res.vectors.shape == (2, 2)
        assert not res.fallback.any()

    def test_early_bins_fall_back_to_raw(self, rng):
        data = complex_noise(rng, (2, 300, 2))
        spec = make_spec(data)
        cfg = WpeConfig(p=2, order_l=2, delay_d=4, max_iters=2)
        binset = self.make_binset([2, 150], [1, 1])
        res = dereverberate_bins(spec, binset, cfg)
        assert res.fallback.tolist() == [True, False]
        np.testing.assert_allclose(res.vectors[0], data[:, 2, 1])

    def test_echo_removed_from_selected_bins(self, rng):
        # all channels carry the same recursive echo; after WPE the desired
        # vectors should be much closer to the dry component
        n, gain, delay = 1200, 0.85, 3
        s = complex_noise(rng, n, 1e-3)
        x = np.zeros(n, dtype=complex)
        for i in range(n):
            x[i] = s[i] + (gain * x[i - delay] if i >= delay else 0.0)
        data = np.stack([x, x])[:, :, None]
        spec = make_spec(data)
        cfg = WpeConfig(p=1, order_l=2, delay_d=delay, max_iters=3)
        frames = np.arange(cfg.history + 10, n, 7)
        binset = self.make_binset(frames, np.zeros(frames.size, dtype=int))
        res = dereverberate_bins(spec, binset, cfg)
        err_d = np.abs(res.vectors[:, 0] - s[frames])
        err_x = np.abs(x[frames] - s[frames])
        assert np.mean(err_d) < 0.5 * np.mean(err_x)
