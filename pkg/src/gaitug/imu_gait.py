"""Step timing from insole IMU streams, the sensor-side reference.

Per foot, mid-swing candidates are positive peaks of the smoothed gyro-z
channel; each candidate must be corroborated by a vertical-acceleration peak
within the corroboration window (default 150 ms) to count as a step. Streams
stay at their native rate; step times are seconds between successive
validated events of opposite feet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_PARAMS, AnalysisParams
from .domain import ImuRecording
from .errors import DegenerateSignalError, DomainError, StepDetectionError
from .signals import adaptive_peak_params, find_peaks, make_gaussian_kernel, smooth

GYRO_Z = 2
ACCEL_VERTICAL = 1


@dataclass(frozen=True)
class ImuStepSeries:
    """Validated per-foot events (sample indices) and derived step times."""

    left_events: list[int]
    right_events: list[int]
    step_times: list[float]
    mean_s: float | None
    sd_s: float | None
    n_same_foot_excluded: int
    fps: float


def _side_events(accel: np.ndarray, gyro: np.ndarray, fps: float,
                 params: AnalysisParams, side: str) -> list[int]:
    kernel = make_gaussian_kernel(params.sigma)
    min_sep = max(1, round(params.step_min_separation_s * fps))
    window = params.imu_corroboration_s * fps
    try:
        g = smooth(gyro[:, GYRO_Z], kernel)
        gp = find_peaks(g, adaptive_peak_params(g, "positive",
                                                height_k=params.peak_height_k,
                                                min_distance=min_sep), "positive")
        a = smooth(accel[:, ACCEL_VERTICAL], kernel)
        ap = find_peaks(a, adaptive_peak_params(a, "positive",
                                                height_k=params.peak_height_k,
                                                min_distance=min_sep), "positive")
    except (DegenerateSignalError, DomainError) as e:
        raise StepDetectionError(f"{side} insole: {e}") from None
    accel_frames = np.array([p.peak_frame for p in ap], dtype=float)
    validated = []
    for p in gp:
        if accel_frames.size and np.min(np.abs(accel_frames - p.peak_frame)) <= window:
            validated.append(p.peak_frame)
    if not validated:
        raise StepDetectionError(
            f"{side} insole: no gyro peak corroborated by vertical acceleration "
            f"within {params.imu_corroboration_s * 1000:.0f} ms")
    return validated


def imu_step_times(rec: ImuRecording,
                   params: AnalysisParams = DEFAULT_PARAMS) -> ImuStepSeries:
    """Detect steps on both insoles and compute inter-event step times.

    Successive events from the same foot are flagged and excluded from the
    interval list rather than failing the trial.
    """
    if rec.left.n_samples / rec.fps < 2.0:
        raise DomainError(
            f"IMU recording too short: {rec.left.n_samples / rec.fps:.2f} s, need >= 2 s")
    left = _side_events(rec.left.accel, rec.left.gyro, rec.fps, params, "left")
    right = _side_events(rec.right.accel, rec.right.gyro, rec.fps, params, "right")
    merged = sorted([(i, "left") for i in left] + [(i, "right") for i in right])
    times = []
    same_foot = 0
    for (i1, f1), (i2, f2) in zip(merged, merged[1:]):
        if f1 == f2:
            same_foot += 1
            continue
        times.append((i2 - i1) / rec.fps)
    return ImuStepSeries(
        left_events=left, right_events=right, step_times=times,
        mean_s=float(np.mean(times)) if times else None,
        sd_s=float(np.std(times, ddof=1)) if len(times) >= 2 else None,
        n_same_foot_excluded=same_foot, fps=rec.fps)


def trial_mean_step_time(series: ImuStepSeries) -> float:
    if not series.step_times:
        raise StepDetectionError("no step intervals in IMU series")
    return float(np.mean(series.step_times))
