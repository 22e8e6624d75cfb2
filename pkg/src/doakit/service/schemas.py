"""Request/response models for the estimation service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class EstimateRequest(BaseModel):
    wav_b64: str | None = Field(
        default=None, description="Base64-encoded WAV payload")
    wav_path: str | None = Field(
        default=None, description="Server-side WAV path (alternative)")
    config: dict | None = Field(
        default=None, description="Configuration overrides, file-format keys")
    baseline: bool = Field(
        default=False, description="Run the SRP-PHAT baseline instead")


class EstimateResponse(BaseModel):
    theta: float
    method: str
    tau_mid: float | None = None
    num_selected: int = 0
    num_mid: int = 0
    num_high: int = 0
    transient_frames: list[int] = []
    warnings: list[str] = []
    timings: dict[str, float] = {}


class SimulateRequest(BaseModel):
    recipe: dict = Field(description="Suite recipe (same schema as the file)")


class SimulatedTrial(BaseModel):
    trial: int
    target_angle: float
    interference_angle: float | None = None
    wav_b64: str


class SimulateResponse(BaseModel):
    sample_rate: float
    trials: list[SimulatedTrial]


class SuiteRequest(BaseModel):
    recipe: dict
    estimators: list[str] = ["proposed", "baseline"]
    workers: int = 1


class TrialRecordModel(BaseModel):
    trial: int
    estimator: str
    theta_true: float
    theta_est: float | None
    error: float | None
    captured: bool
    interference_angle: float | None
    elapsed: float
    failure: str | None


class SuiteResponse(BaseModel):
    records: list[TrialRecordModel]
    summary: dict[str, dict[str, float]]
    csv: str
