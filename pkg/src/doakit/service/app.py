"""FastAPI service exposing the estimator, simulator, and suite runner."""

from __future__ import annotations

import base64
import io

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..audio_io import load_audio, save_wav
from ..config import config_from_dict, config_to_dict, recipe_from_dict
from ..evaluate import run_suite, simulate_trial
from ..pipeline import estimate, estimate_baseline
from .schemas import (
    EstimateRequest,
    EstimateResponse,
    HealthResponse,
    SimulateRequest,
    SimulateResponse,
    SimulatedTrial,
    SuiteRequest,
    SuiteResponse,
    TrialRecordModel,
)


def _load_request_audio(req: EstimateRequest, cfg):
    if (req.wav_b64 is None) == (req.wav_path is None):
        raise HTTPException(status_code=422,
                            detail="provide exactly one of wav_b64, wav_path")
    source = io.BytesIO(base64.b64decode(req.wav_b64)) \
        if req.wav_b64 is not None else req.wav_path
    try:
        audio, _ = load_audio(source, expected_rate=cfg.stft.sample_rate,
                              expected_channels=cfg.geometry.num_mics)
    except FileNotFoundError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return audio


def create_app() -> FastAPI:
    app = FastAPI(title="doakit", version=__version__,
                  description="Direction-of-arrival estimation for linear "
                              "microphone arrays")

    @app.get("/v1/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.get("/v1/config/default")
    def default_config():
        return config_to_dict(config_from_dict(None))

    @app.post("/v1/estimate", response_model=EstimateResponse)
    def estimate_endpoint(req: EstimateRequest):
        try:
            cfg = config_from_dict(req.config)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        audio = _load_request_audio(req, cfg)
        runner = estimate_baseline if req.baseline else estimate
        try:
            report = runner(audio, cfg)
        except (ValueError, RuntimeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return EstimateResponse(
            theta=report.theta, method=report.method, tau_mid=report.tau_mid,
            num_selected=report.num_selected, num_mid=report.num_mid,
            num_high=report.num_high,
            transient_frames=list(report.transient_frames),
            warnings=list(report.warnings),
            timings={k: float(v) for k, v in report.timings.items()})

    @app.post("/v1/simulate", response_model=SimulateResponse)
    def simulate_endpoint(req: SimulateRequest):
        try:
            recipe = recipe_from_dict(req.recipe)
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        fs = recipe.config.stft.sample_rate
        out = []
        for i, spec in enumerate(recipe.trials):
            capture = simulate_trial(spec, recipe.config)
            buf = io.BytesIO()
            save_wav(buf, capture, fs)
            out.append(SimulatedTrial(
                trial=i, target_angle=spec.target_angle,
                interference_angle=spec.interference_angle,
                wav_b64=base64.b64encode(buf.getvalue()).decode()))
        return SimulateResponse(sample_rate=fs, trials=out)

    @app.post("/v1/suite", response_model=SuiteResponse)
    def suite_endpoint(req: SuiteRequest):
        try:
            recipe = recipe_from_dict(req.recipe)
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        table = run_suite(recipe.trials, recipe.config,
                          estimators=tuple(req.estimators),
                          workers=req.workers)
        return SuiteResponse(
            records=[TrialRecordModel(**r.__dict__) for r in table.records],
            summary=table.summary(), csv=table.to_csv())

    return app


app = create_app()
