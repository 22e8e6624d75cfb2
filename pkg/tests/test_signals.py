import numpy as np
import pytest

from doakit.signals import add_click, synth_click, synth_interference, synth_speech


class TestSpeech:
    def test_shape_and_level(self):
        x = synth_speech(2.0, 16000.0, seed=1)
        assert x.size == 32000
        assert np.max(np.abs(x)) == pytest.approx(0.5)

    def test_deterministic(self):
        np.testing.assert_array_equal(synth_speech(1.0, seed=7),
                                      synth_speech(1.0, seed=7))
        assert not np.array_equal(synth_speech(1.0, seed=7),
                                  synth_speech(1.0, seed=8))

    def test_lead_and_tail_silence(self):
        x = synth_speech(2.0, 16000.0, seed=2, lead_silence=0.25,
                         tail_silence=0.2)
        assert not np.any(x[:int(0.24 * 16000)])
        assert not np.any(x[-int(0.19 * 16000):])

    def test_band_energy(self):
        # both estimation bands must carry usable energy
        x = synth_speech(3.0, 16000.0, seed=3)
        spectrum = np.abs(np.fft.rfft(x)) ** 2
        freqs = np.fft.rfftfreq(x.size, 1 / 16000.0)
        total = spectrum.sum()
        mid = spectrum[(freqs >= 1000) & (freqs < 2000)].sum()
        high = spectrum[(freqs >= 2000) & (freqs <= 4914)].sum()
        assert mid / total > 0.01
        assert high / total > 0.01


class TestClick:
    def test_click_properties(self):
        c = synth_click(16000.0)
        assert np.max(np.abs(c)) == pytest.approx(1.0)
        assert c.size < 100

    def test_add_click(self):
        x = np.zeros(1600)
        out = add_click(x, 0.05, 16000.0, amplitude=2.0)
        assert not np.any(out[:800])
        assert np.max(np.abs(out)) == pytest.approx(2.0)
        with pytest.raises(ValueError):
            add_click(x, 1.0, 16000.0)


class TestInterference:
    @pytest.mark.parametrize("kind", ["fan", "noise", "babble", "music",
                                      "clicks"])
    def test_kinds(self, kind):
        x = synth_interference(kind, 1.0, 16000.0, seed=4)
        assert x.size == 16000
        assert 0 < np.max(np.abs(x)) <= 0.5 + 1e-12

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown interference"):
            synth_interference("kazoo", 1.0)

    def test_fan_is_lowpassed(self):
        x = synth_interference("fan", 2.0, 16000.0, seed=5)
        spectrum = np.abs(np.fft.rfft(x)) ** 2
        freqs = np.fft.rfftfreq(x.size, 1 / 16000.0)
        low = spectrum[freqs < 1000].sum()
        assert low / spectrum.sum() > 0.9
