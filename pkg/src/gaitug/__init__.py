"""Gait and TUG-subtask analysis from world-space joint trajectories.

Extracts spatiotemporal gait parameters and TUG segmentations from 3D joint
trajectories, cross-validates step timing against insole IMU streams, and
fits random-intercept mixed models relating gait metrics to fall-risk scores.
"""

__version__ = "0.1.0"

from .config import AnalysisParams, DEFAULT_PARAMS
from .domain import (FallRiskCovariates, ImuRecording, ImuSideStream,
                     JointIndexTable, TrialRecording)
from .errors import (ConfigError, DataError, DegenerateSignalError,
                     DesignError, DirectionError, DomainError, GaitugError,
                     InsufficientStepsError, MatchingError, ParseError,
                     SegmentationError, StepDetectionError, StructuralError,
                     UsageError)
from .gait_metrics import GaitMetrics, compute_gait_metrics, detect_steps
from .imu_gait import ImuStepSeries, imu_step_times
from .io_ingest import (load_covariates, load_imu, load_trajectory,
                        parse_covariates, parse_imu, parse_trajectory,
                        render_covariates, render_imu, render_trajectory,
                        save_covariates, save_imu, save_trajectory)
from .lme import LmeFit, LmeSpec, fit_lme, fit_lme_arrays, icc
from .pipeline import TrialAnalysis, analyze_recording, analyze_trials
from .segmentation import (CompositeSignals, SubtaskSegmentation,
                           compute_signals, segment, segment_trial)
from .stats import (AgreementResult, SpearmanResult, StepTimePair,
                    compare_video_insole, shapiro_wilk, spearman)
from .synth import (CohortConfig, GroundTruth, SynthConfig, SynthResult,
                    generate, generate_cohort)

__all__ = [
    "__version__",
    "AnalysisParams", "DEFAULT_PARAMS",
    "FallRiskCovariates", "ImuRecording", "ImuSideStream", "JointIndexTable",
    "TrialRecording",
    "ConfigError", "DataError", "DegenerateSignalError", "DesignError",
    "DirectionError", "DomainError", "GaitugError", "InsufficientStepsError",
    "MatchingError", "ParseError", "SegmentationError", "StepDetectionError",
    "StructuralError", "UsageError",
    "GaitMetrics", "compute_gait_metrics", "detect_steps",
    "ImuStepSeries", "imu_step_times",
    "load_covariates", "load_imu", "load_trajectory",
    "parse_covariates", "parse_imu", "parse_trajectory",
    "render_covariates", "render_imu", "render_trajectory",
    "save_covariates", "save_imu", "save_trajectory",
    "LmeFit", "LmeSpec", "fit_lme", "fit_lme_arrays", "icc",
    "TrialAnalysis", "analyze_recording", "analyze_trials",
    "CompositeSignals", "SubtaskSegmentation", "compute_signals", "segment",
    "segment_trial",
    "AgreementResult", "SpearmanResult", "StepTimePair",
    "compare_video_insole", "shapiro_wilk", "spearman",
    "CohortConfig", "GroundTruth", "SynthConfig", "SynthResult", "generate",
    "generate_cohort",
]
