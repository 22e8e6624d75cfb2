import base64
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient

from doakit import __version__
from doakit.audio_io import save_wav
from doakit.evaluate import MetricsTable
from doakit.room import ArrayGeometry, RoomSpec, place_source, simulate_capture
from doakit.service import create_app
from doakit.signals import synth_speech

CONFIG = {"array": {"num_mics": 4, "spacing": 0.035,
                    "center": [3.5, 2.2, 1.5]}}


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def capture_b64():
    geometry = ArrayGeometry.linear(4, 0.035, center=(3.5, 2.2, 1.5))
    room = RoomSpec.anechoic((7.0, 5.0, 3.0))
    capture = simulate_capture(synth_speech(1.0, seed=3), room, geometry,
                               place_source(geometry, -36.0, 2.0))
    buf = io.BytesIO()
    save_wav(buf, capture, 16000)
    return base64.b64encode(buf.getvalue()).decode()


class TestHealthAndConfig:
    def test_health(self, client):
        got = client.get("/v1/health")
        assert got.status_code == 200
        assert got.json() == {"status": "ok", "version": __version__}

    def test_default_config(self, client):
        got = client.get("/v1/config/default")
        assert got.status_code == 200
        data = got.json()
        assert data["window_width"] == 512
        assert data["alpha"] == 8.0


class TestEstimateEndpoint:
    def test_baseline_estimate(self, client, capture_b64):
        got = client.post("/v1/estimate", json={
            "wav_b64": capture_b64, "config": CONFIG, "baseline": True})
        assert got.status_code == 200, got.text
        body = got.json()
        assert abs(body["theta"] + 36.0) <= 1.0
        assert body["method"] == "baseline"

    def test_proposed_estimate(self, client, capture_b64):
        got = client.post("/v1/estimate", json={
            "wav_b64": capture_b64, "config": CONFIG})
        assert got.status_code == 200, got.text
        body = got.json()
        assert abs(body["theta"] + 36.0) <= 1.0
        assert body["num_selected"] > 0
        assert "stft" in body["timings"]

    def test_requires_exactly_one_source(self, client, capture_b64):
        assert client.post("/v1/estimate", json={}).status_code == 422
        assert client.post("/v1/estimate", json={
            "wav_b64": capture_b64, "wav_path": "/x.wav"}).status_code == 422

    def test_channel_mismatch_rejected(self, client):
        buf = io.BytesIO()
        save_wav(buf, np.zeros((2, 9000)), 16000)
        got = client.post("/v1/estimate", json={
            "wav_b64": base64.b64encode(buf.getvalue()).decode(),
            "config": CONFIG})
        assert got.status_code == 422
        assert "channel-count" in got.json()["detail"]

    def test_bad_config_rejected(self, client, capture_b64):
        got = client.post("/v1/estimate", json={
            "wav_b64": capture_b64, "config": {"bogus_key": 1}})
        assert got.status_code == 422


class TestSimulateEndpoint:
    def test_round_trip(self, client):
        recipe = {
            "room": {"dimensions": [7, 5, 3]},
            "config": CONFIG,
            "trials": [{"target_angle": 20,
                        "utterance": {"seed": 1, "duration": 0.6}}],
        }
        got = client.post("/v1/simulate", json={"recipe": recipe})
        assert got.status_code == 200, got.text
        body = got.json()
        assert body["sample_rate"] == 16000.0
        raw = base64.b64decode(body["trials"][0]["wav_b64"])
        from scipy.io import wavfile

        rate, data = wavfile.read(io.BytesIO(raw))
        assert rate == 16000
        assert data.shape[1] == 4

    def test_bad_recipe(self, client):
        got = client.post("/v1/simulate", json={"recipe": {"trials": []}})
        assert got.status_code == 422


class TestSuiteEndpoint:
    def test_baseline_suite(self, client):
        recipe = {
            "room": {"dimensions": [7, 5, 3]},
            "config": CONFIG,
            "trials": [
                {"target_angle": 30,
                 "utterance": {"seed": 1, "duration": 0.6}},
                {"target_angle": -45,
                 "utterance": {"seed": 2, "duration": 0.6}},
            ],
        }
        got = client.post("/v1/suite", json={
            "recipe": recipe, "estimators": ["baseline"]})
        assert got.status_code == 200, got.text
        body = got.json()
        assert len(body["records"]) == 2
        assert "baseline" in body["summary"]
        table = MetricsTable.from_csv(body["csv"])
        assert len(table.records) == 2
