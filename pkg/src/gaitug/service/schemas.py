"""Request/response models for the HTTP service.

File-shaped payloads travel as named text blobs: the client owns disk I/O,
the service owns computation and deterministic rendering.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class NamedFile(BaseModel):
    name: str
    content: str


class ParamOverrides(BaseModel):
    """Optional analysis-parameter overrides; omitted fields keep defaults."""
    sigma: float | None = None
    butter_cutoff_hz: float | None = None
    butter_order: int | None = None
    peak_height_k: float | None = None
    peak_dist_frac: float | None = None
    step_min_separation_s: float | None = None
    imu_corroboration_s: float | None = None

    def overrides(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class AnalyzeRequest(BaseModel):
    trajectories: list[NamedFile]
    overrides: ParamOverrides | None = None
    units: Literal["report", "si"] = "report"
    fps_override: float | None = Field(default=None, gt=0)
    threads: int | None = Field(default=None, ge=1)


class FailureModel(BaseModel):
    name: str
    kind: str
    message: str


class AnalyzeResponse(BaseModel):
    metrics_csv: str
    segmentations: list[NamedFile]
    failures: list[FailureModel]
    n_ok: int
    n_failed: int


class SynthConfigModel(BaseModel):
    """Mirrors the generator configuration; validation happens in the core
    config type so the service and library reject identical inputs."""
    fps: float = 30.0
    imu_fps: float = 60.0
    participant_id: str = "SYN001"
    trial_index: int = 1
    step_length_m: float = 0.5
    step_width_m: float = 0.10
    cadence_steps_per_s: float = 1.6
    sts1_duration_s: float = 1.2
    sts2_duration_s: float = 1.4
    turn_duration_s: float = 1.8
    walkway_length_m: float = 3.0
    noise_sd_m: float = 0.0
    seed: int = 0


class CohortConfigModel(BaseModel):
    n_participants: int = 30
    trials_per_participant: int = 3
    seed: int = 0
    fps: float = 30.0
    imu_fps: float = 60.0
    noise_sd_m: float = 0.002


class SynthRequest(BaseModel):
    config: SynthConfigModel | None = None
    cohort: CohortConfigModel | None = None


class FilesResponse(BaseModel):
    files: list[NamedFile]


class CompareRequest(BaseModel):
    metrics_csv: str
    imu_files: list[NamedFile]
    min_trials: int = Field(default=3, ge=1)


class CompareResponse(BaseModel):
    report: dict
    report_json: str


class LmeRequest(BaseModel):
    metrics_csv: str
    covariates_csv: str
    outcome: str
    predictors: list[str]
    fix_variance_ratio: float | None = Field(default=None, ge=0)


class LmeResponse(BaseModel):
    fit: dict
    fit_json: str
    table: str


class ReportRequest(BaseModel):
    metrics_csv: str
    covariates_csv: str
    units: Literal["report", "si"] = "report"


class HealthResponse(BaseModel):
    status: str
    version: str
