import json

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from doakit.audio_io import save_wav
from doakit.cli import main
from doakit.pipeline import PipelineConfig
from doakit.room import ArrayGeometry, RoomSpec, place_source, simulate_capture
from doakit.signals import synth_speech


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """A WAV capture at +36 deg, a matching config file, and a recipe."""
    root = tmp_path_factory.mktemp("cli")
    geometry = ArrayGeometry.linear(4, 0.035, center=(3.5, 2.2, 1.5))
    room = RoomSpec.anechoic((7.0, 5.0, 3.0))
    capture = simulate_capture(synth_speech(1.0, seed=3), room, geometry,
                               place_source(geometry, 36.0, 2.0))
    save_wav(root / "capture.wav", capture, 16000)

    config = {"array": {"num_mics": 4, "spacing": 0.035,
                        "center": [3.5, 2.2, 1.5]}}
    (root / "config.yaml").write_text(yaml.safe_dump(config))

    recipe = {
        "room": {"dimensions": [7, 5, 3]},
        "config": config,
        "trials": [
            {"target_angle": 36, "utterance": {"seed": 3, "duration": 0.8}},
            {"target_angle": -20, "utterance": {"seed": 4, "duration": 0.8}},
        ],
    }
    (root / "recipe.yaml").write_text(yaml.safe_dump(recipe))
    return root


class TestEstimateCommand:
    def test_baseline_run(self, workdir):
        runner = CliRunner()
        result = runner.invoke(main, [
            "estimate", str(workdir / "capture.wav"),
            "--config", str(workdir / "config.yaml"),
            "--baseline", "--report", str(workdir / "report.json")])
        assert result.exit_code == 0, result.output
        assert "theta" in result.output
        report = json.loads((workdir / "report.json").read_text())
        assert abs(report["theta"] - 36.0) <= 1.0
        assert report["method"] == "baseline"

    def test_proposed_run(self, workdir):
        runner = CliRunner()
        result = runner.invoke(main, [
            "estimate", str(workdir / "capture.wav"),
            "--config", str(workdir / "config.yaml")])
        assert result.exit_code == 0, result.output
        assert "+36" in result.output or "+35" in result.output or \
            "+37" in result.output

    def test_sample_rate_mismatch_fails(self, workdir, tmp_path):
        bad = tmp_path / "bad.wav"
        save_wav(bad, np.zeros((4, 9000)), 44100)
        runner = CliRunner()
        result = runner.invoke(main, [
            "estimate", str(bad), "--config", str(workdir / "config.yaml")])
        assert result.exit_code != 0
        assert "sample-rate mismatch" in result.output

    def test_missing_file_fails(self):
        runner = CliRunner()
        result = runner.invoke(main, ["estimate", "/no/such.wav"])
        assert result.exit_code != 0

    def test_server_mode_posts_payload(self, workdir, monkeypatch):
        import httpx

        seen = {}

        class FakeResponse:
            status_code = 200

            @staticmethod
            def json():
                return {"theta": 36.0, "method": "proposed", "warnings": []}

        def fake_post(url, json=None, timeout=None):
            seen["url"] = url
            seen["payload"] = json
            return FakeResponse()

        monkeypatch.setattr(httpx, "post", fake_post)
        runner = CliRunner()
        result = runner.invoke(main, [
            "estimate", str(workdir / "capture.wav"),
            "--server", "http://localhost:9999"])
        assert result.exit_code == 0, result.output
        assert seen["url"] == "http://localhost:9999/v1/estimate"
        assert "wav_b64" in seen["payload"]


class TestSimulateCommand:
    def test_writes_wavs_and_manifest(self, workdir, tmp_path):
        out = tmp_path / "renders"
        runner = CliRunner()
        result = runner.invoke(main, [
            "simulate", "--recipe", str(workdir / "recipe.yaml"),
            "--out", str(out)])
        assert result.exit_code == 0, result.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest) == 2
        assert (out / "trial_000.wav").exists()
        assert (out / "trial_001.wav").exists()


class TestSuiteCommand:
    def test_baseline_suite(self, workdir, tmp_path):
        report = tmp_path / "metrics.csv"
        runner = CliRunner()
        result = runner.invoke(main, [
            "suite", "--recipe", str(workdir / "recipe.yaml"),
            "--report", str(report), "--estimator", "baseline"])
        assert result.exit_code == 0, result.output
        assert "baseline" in result.output
        text = report.read_text()
        assert text.startswith("trial,estimator")
        assert text.count("\n") == 3  # header + 2 trials
