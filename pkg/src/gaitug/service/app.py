"""FastAPI application exposing the analysis pipeline.

Errors surface as a stable JSON body {kind, message, detail}; the kind maps
onto the CLI exit-code contract (usage/config -> 2, data/analysis -> 1).
"""

from __future__ import annotations

import dataclasses

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import DEFAULT_PARAMS
from ..domain import TrialRecording
from ..errors import GaitugError
from ..io_ingest import (parse_covariates, parse_imu, parse_trajectory,
                         render_covariates, render_imu, render_trajectory)
from ..pipeline import (analyze_trials, compare_from_tables, lme_from_tables,
                        report_from_tables)
from ..reports import (agreement_dict, json_dumps, lme_dict, render_lme_json,
                       render_lme_table, render_metrics_csv,
                       render_segmentation_json)
from ..synth import CohortConfig, SynthConfig, SynthResult, generate, generate_cohort
from .schemas import (AnalyzeRequest, AnalyzeResponse, CompareRequest,
                      CompareResponse, FailureModel, FilesResponse,
                      HealthResponse, LmeRequest, LmeResponse, NamedFile,
                      ReportRequest, SynthRequest)


def _error_body(exc: GaitugError) -> dict:
    detail: dict = {"type": type(exc).__name__}
    for attr in ("path", "line", "event"):
        value = getattr(exc, attr, None)
        if value is not None:
            detail[attr] = value
    return {"kind": exc.kind, "message": str(exc), "detail": detail}


def _trial_files(res: SynthResult) -> list[NamedFile]:
    base = f"{res.config.participant_id}_t{res.config.trial_index}"
    return [
        NamedFile(name=f"{base}.traj.csv", content=render_trajectory(res.trial)),
        NamedFile(name=f"{base}.imu.csv", content=render_imu(res.imu)),
        NamedFile(name=f"{base}.truth.json", content=json_dumps(res.truth.to_dict())),
    ]


def create_app() -> FastAPI:
    app = FastAPI(title="gaitug", version=__version__)

    @app.exception_handler(GaitugError)
    async def gaitug_error(request: Request, exc: GaitugError):
        return JSONResponse(status_code=400, content=_error_body(exc))

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={
            "kind": "usage",
            "message": "request body failed validation",
            "detail": {"type": "RequestValidationError",
                       "errors": [{"loc": [str(p) for p in e["loc"]],
                                   "msg": e["msg"]} for e in exc.errors()]},
        })

    @app.get("/v1/health", response_model=HealthResponse)
    async def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/v1/analyze", response_model=AnalyzeResponse)
    def analyze(req: AnalyzeRequest) -> AnalyzeResponse:
        params = DEFAULT_PARAMS
        if req.overrides is not None and req.overrides.overrides():
            params = dataclasses.replace(DEFAULT_PARAMS, **req.overrides.overrides())
        named: list[tuple[str, TrialRecording]] = []
        failures: list[FailureModel] = []
        for nf in req.trajectories:
            try:
                trial = parse_trajectory(nf.content, source=nf.name)
                if req.fps_override is not None:
                    trial = dataclasses.replace(trial, fps=req.fps_override)
                named.append((nf.name, trial))
            except GaitugError as exc:
                failures.append(FailureModel(name=nf.name, kind=exc.kind,
                                             message=str(exc)))
        analyses, run_failures = analyze_trials(named, params=params,
                                                threads=req.threads)
        failures.extend(FailureModel(name=f.name, kind=f.kind, message=f.message)
                        for f in run_failures)
        segs = [NamedFile(
            name=f"{a.participant_id}_t{a.trial_index}.segmentation.json",
            content=render_segmentation_json(a.participant_id, a.trial_index,
                                             a.segmentation))
            for a in analyses]
        return AnalyzeResponse(
            metrics_csv=render_metrics_csv([a.row for a in analyses], req.units),
            segmentations=segs, failures=failures,
            n_ok=len(analyses), n_failed=len(failures))

    @app.post("/v1/synth", response_model=FilesResponse)
    def synth(req: SynthRequest) -> FilesResponse:
        files: list[NamedFile] = []
        if req.cohort is not None:
            cohort = generate_cohort(CohortConfig(**req.cohort.model_dump()))
            for res in cohort.trials:
                files.extend(_trial_files(res))
            files.append(NamedFile(name="covariates.csv",
                                   content=render_covariates(list(cohort.covariates))))
        else:
            cfg_model = req.config
            cfg = SynthConfig(**cfg_model.model_dump()) if cfg_model else SynthConfig()
            files.extend(_trial_files(generate(cfg)))
        return FilesResponse(files=files)

    @app.post("/v1/compare", response_model=CompareResponse)
    def compare(req: CompareRequest) -> CompareResponse:
        imus = [parse_imu(nf.content, source=nf.name) for nf in req.imu_files]
        result = compare_from_tables(req.metrics_csv, imus,
                                     min_trials=req.min_trials)
        report = agreement_dict(result)
        return CompareResponse(report=report, report_json=json_dumps(report))

    @app.post("/v1/lme", response_model=LmeResponse)
    def lme(req: LmeRequest) -> LmeResponse:
        covariates = parse_covariates(req.covariates_csv, source="covariates")
        fit = lme_from_tables(req.metrics_csv, covariates, req.outcome,
                              req.predictors,
                              fix_variance_ratio=req.fix_variance_ratio)
        return LmeResponse(fit=lme_dict(fit), fit_json=render_lme_json(fit),
                           table=render_lme_table(fit, req.outcome))

    @app.post("/v1/report", response_model=FilesResponse)
    def report(req: ReportRequest) -> FilesResponse:
        covariates = parse_covariates(req.covariates_csv, source="covariates")
        files = report_from_tables(req.metrics_csv, covariates, units=req.units)
        return FilesResponse(files=[NamedFile(name=k, content=v)
                                    for k, v in files.items()])

    return app
