"""Trial-level orchestration: analyze recordings, join tables, build reports.

This layer connects the detectors to the serialized table formats. It is the
single place that decides what a "row" of output means, so the HTTP service
and the CLI cannot drift apart.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import AnalysisParams, DEFAULT_PARAMS
from .domain import FallRiskCovariates, ImuRecording, JointIndexTable, TrialRecording
from .errors import GaitugError, MatchingError, UsageError
from .gait_metrics import GaitMetrics, compute_gait_metrics
from .imu_gait import imu_step_times, trial_mean_step_time
from .lme import LmeFit, LmeSpec, fit_lme
from .reports import (TrialMetricsRow, json_dumps, parse_metrics_csv,
                      render_scatter_svg)
from .segmentation import SubtaskSegmentation, segment_trial
from .stats import AgreementResult, StepTimePair, compare_video_insole

FACTOR_COLUMNS = ("age", "steadi", "short_fes_i", "btracks")


@dataclass(frozen=True)
class TrialAnalysis:
    participant_id: str
    trial_index: int
    fps: float
    metrics: GaitMetrics
    segmentation: SubtaskSegmentation

    @property
    def row(self) -> TrialMetricsRow:
        return TrialMetricsRow.from_analysis(self.participant_id, self.trial_index,
                                             self.metrics, self.segmentation)


@dataclass(frozen=True)
class TrialFailure:
    name: str
    kind: str
    message: str


def worker_count(requested: int | None = None) -> int:
    """Pool size: explicit request, else GAITUG_THREADS, else host parallelism."""
    if requested is not None and requested >= 1:
        return requested
    env = os.environ.get("GAITUG_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise UsageError(f"GAITUG_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise UsageError(f"GAITUG_THREADS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def analyze_recording(trial: TrialRecording,
                      joints: JointIndexTable = JointIndexTable(),
                      params: AnalysisParams = DEFAULT_PARAMS) -> TrialAnalysis:
    _, seg = segment_trial(trial, joints, params)
    metrics = compute_gait_metrics(trial, joints, seg, params)
    return TrialAnalysis(participant_id=trial.participant_id,
                         trial_index=trial.trial_index, fps=trial.fps,
                         metrics=metrics, segmentation=seg)


def analyze_trials(named_trials: list[tuple[str, TrialRecording]],
                   joints: JointIndexTable = JointIndexTable(),
                   params: AnalysisParams = DEFAULT_PARAMS,
                   threads: int | None = None,
                   ) -> tuple[list[TrialAnalysis], list[TrialFailure]]:
    """Analyze trials on a worker pool, preserving input order. Detector
    failures become failure records instead of aborting the batch."""

    def run(item):
        name, trial = item
        try:
            return analyze_recording(trial, joints, params), None
        except GaitugError as exc:
            return None, TrialFailure(name=name, kind=exc.kind, message=str(exc))

    workers = min(worker_count(threads), max(len(named_trials), 1))
    if workers == 1:
        outcomes = [run(item) for item in named_trials]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, named_trials))
    analyses = [a for a, _ in outcomes if a is not None]
    failures = [f for _, f in outcomes if f is not None]
    return analyses, failures


# ---------------------------------------------------------------------------
# Agreement (video vs insole)

def pairs_from_tables(metric_rows: list[dict],
                      imus: list[ImuRecording]) -> list[StepTimePair]:
    """Join analyzed trials with insole recordings on (participant, trial).
    Rows lacking a video step-time mean or an insole counterpart are skipped;
    an empty join is a matching error."""
    by_key: dict[tuple[str, int], ImuRecording] = {}
    for imu in imus:
        by_key[(imu.participant_id, imu.trial_index)] = imu
    pairs: list[StepTimePair] = []
    for row in metric_rows:
        key = (row["participant_id"], int(row["trial_index"]))
        imu = by_key.get(key)
        if imu is None or row.get("st_mean") is None:
            continue
        series = imu_step_times(imu)
        pairs.append(StepTimePair(
            participant_id=key[0], trial_index=key[1],
            video_mean_st_s=float(row["st_mean"]),
            insole_mean_st_s=trial_mean_step_time(series)))
    if not pairs:
        raise MatchingError("no overlapping (participant, trial) keys between "
                            "metrics rows and insole recordings")
    return pairs


def compare_from_tables(metrics_csv: str, imus: list[ImuRecording],
                        min_trials: int = 3) -> AgreementResult:
    rows = parse_metrics_csv(metrics_csv)
    return compare_video_insole(pairs_from_tables(rows, imus), min_trials=min_trials)


# ---------------------------------------------------------------------------
# Mixed models over joined tables

def join_covariates(metric_rows: list[dict],
                    covariates: list[FallRiskCovariates]) -> list[dict]:
    cov_by_pid = {c.participant_id: c.as_dict() for c in covariates}
    joined = []
    for row in metric_rows:
        cov = cov_by_pid.get(row["participant_id"])
        if cov is None:
            continue
        merged = dict(row)
        for k, v in cov.items():
            if k != "participant_id":
                merged[k] = v
        joined.append(merged)
    return joined


def lme_from_tables(metrics_csv: str, covariates: list[FallRiskCovariates],
                    outcome: str, predictors: list[str],
                    fix_variance_ratio: float | None = None) -> LmeFit:
    rows = join_covariates(parse_metrics_csv(metrics_csv), covariates)
    if not rows:
        raise UsageError("metrics and covariates share no participant_id")
    spec = LmeSpec(outcome=outcome, predictors=tuple(predictors))
    return fit_lme(spec, rows, fix_variance_ratio=fix_variance_ratio)


# ---------------------------------------------------------------------------
# Report bundle

REPORT_METRICS = {
    "report": (("sl_mean_cm", "mean step length (cm)"),
               ("sl_sd_mm", "step length variability (mm)"),
               ("sts1_s", "sit-to-stand duration (s)")),
    "si": (("sl_mean_m", "mean step length (m)"),
           ("sl_sd_m", "step length variability (m)"),
           ("sts1_s", "sit-to-stand duration (s)")),
}

FACTOR_LABELS = {
    "age": "age (years)",
    "steadi": "STEADI score",
    "short_fes_i": "Short FES-I score",
    "btracks": "BTrackS score",
}


def report_from_tables(metrics_csv: str, covariates: list[FallRiskCovariates],
                       units: str = "report") -> dict[str, str]:
    """SVG scatterplots (one per metric x factor) plus a summary JSON of
    means and SDs. Returns {filename: content}. The trend line comes from a
    random-intercept fit and is suppressed when fewer than two participants
    remain (no group variance to separate)."""
    if units not in REPORT_METRICS:
        raise UsageError(f"units must be one of ('report', 'si'), got {units!r}")
    rows = join_covariates(parse_metrics_csv(metrics_csv), covariates)
    if not rows:
        raise UsageError("metrics and covariates share no participant_id")
    factors = [c for c in FACTOR_COLUMNS
               if any(r.get(c) is not None for r in rows)]
    files: dict[str, str] = {}
    summary: dict = {
        "n_rows": len(rows),
        "n_participants": len({r["participant_id"] for r in rows}),
        "units": units,
        "metrics": {},
        "factors": {},
        "plots": [],
    }

    def mean_sd(values: list[float]) -> dict:
        arr = np.asarray(values, dtype=float)
        out = {"n": int(arr.size), "mean": None, "sd": None}
        if arr.size:
            out["mean"] = float(arr.mean())
        if arr.size >= 2:
            out["sd"] = float(arr.std(ddof=1))
        return out

    for metric, _ in REPORT_METRICS[units]:
        summary["metrics"][metric] = mean_sd(
            [r[metric] for r in rows if r.get(metric) is not None])
    for factor in factors:
        per_pid = {r["participant_id"]: r[factor] for r in rows
                   if r.get(factor) is not None}
        summary["factors"][factor] = mean_sd(list(per_pid.values()))

    for metric, metric_label in REPORT_METRICS[units]:
        for factor in factors:
            usable = [r for r in rows
                      if r.get(metric) is not None and r.get(factor) is not None]
            if not usable:
                continue
            x = [float(r[factor]) for r in usable]
            y = [float(r[metric]) for r in usable]
            trend = None
            if len({r["participant_id"] for r in usable}) >= 2:
                try:
                    fit = fit_lme(LmeSpec(outcome=metric, predictors=(factor,)),
                                  usable)
                    trend = (fit.effect("(Intercept)").estimate,
                             fit.effect(factor).estimate)
                except GaitugError:
                    trend = None
            name = f"{metric}_vs_{factor}.svg"
            files[name] = render_scatter_svg(
                x, y, FACTOR_LABELS.get(factor, factor), metric_label,
                f"{metric_label} vs {FACTOR_LABELS.get(factor, factor)}",
                trend=trend)
            summary["plots"].append({
                "file": name, "metric": metric, "factor": factor,
                "n_points": len(x),
                "trend": None if trend is None else
                {"intercept": trend[0], "slope": trend[1]},
            })
    files["summary.json"] = json_dumps(summary)
    return files
