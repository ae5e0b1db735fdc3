"""TUG subtask segmentation from world-space joint trajectories.

Builds two derived series and finds four events on them:

* an STS composite, ``1.0 * ydot_hip + 0.7 * zdot_shoulder + 0.5 * thetadot_trunk``,
  whose largest positive peak is the sit-to-stand (STS-1) and largest negative
  peak the stand-to-sit (STS-2);
* the hip line (right-hip minus left-hip position projected on the lateral
  axis), whose filtered derivative peaks at the first 180-degree turn and
  troughs at the second.

The anterior axis needed for the shoulder-velocity term is derived from the
data in two passes: a provisional axis from hip-midpoint displacement over the
first third of the trial drives a provisional segmentation, and the final
axis is the hip displacement over the provisional first walking phase
(STS-1 end to Turn-1 start). Turn searches are restricted to the frames
between STS-1 end and STS-2 start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_PARAMS, AnalysisParams
from .domain import JointIndexTable, TrialRecording
from .errors import DomainError, GaitugError, SegmentationError
from .signals import (GaussianKernel, Peak, adaptive_peak_params, butterworth_filtfilt,
                      derivative, design_butterworth, find_peaks, make_gaussian_kernel,
                      smooth)

UP = np.array([0.0, 1.0, 0.0])

STS_WEIGHT_HIP_RISE = 1.0
STS_WEIGHT_SHOULDER_ADVANCE = 0.7
STS_WEIGHT_TRUNK_PITCH = 0.5

_MIN_AXIS_NORM = 1e-6


@dataclass(frozen=True)
class CompositeSignals:
    """Derived per-frame series; every array matches the trial length."""

    sts: np.ndarray
    hip_line: np.ndarray
    hip_line_velocity: np.ndarray
    trunk_angle: np.ndarray
    fps: float
    anterior_axis: np.ndarray  # (3,) horizontal unit vector
    lateral_axis: np.ndarray   # (3,) = up x anterior


@dataclass(frozen=True)
class SubtaskSegmentation:
    sts1: Peak
    turn1: Peak
    turn2: Peak
    sts2: Peak
    fps: float

    EVENTS = ("sts1", "turn1", "turn2", "sts2")

    @property
    def durations(self) -> dict[str, float]:
        return {name: getattr(self, name).duration_s(self.fps) for name in self.EVENTS}

    def event(self, name: str) -> Peak:
        return getattr(self, name)


def _horizontal(v: np.ndarray) -> np.ndarray:
    out = np.array(v, dtype=float)
    out[1] = 0.0
    return out


def _unit_or_none(v: np.ndarray) -> np.ndarray | None:
    n = float(np.linalg.norm(v))
    if n < _MIN_AXIS_NORM:
        return None
    return v / n


def _provisional_anterior(hip_mid: np.ndarray) -> np.ndarray:
    # Net horizontal displacement over the first third of the trial, which the
    # outbound walk dominates (sitting and rising move the hip midpoint almost
    # nowhere horizontally). A window centered later can straddle the turn and
    # flip the sign on out-and-back trials. Whole trial as a fallback; +Z when
    # the subject never moves.
    t = hip_mid.shape[0]
    third = max(t // 3, 1)
    a = _unit_or_none(_horizontal(hip_mid[min(third, t - 1)] - hip_mid[0]))
    if a is None:
        a = _unit_or_none(_horizontal(hip_mid[-1] - hip_mid[0]))
    if a is None:
        a = np.array([0.0, 0.0, 1.0])
    return a


class _Filters:
    def __init__(self, fps: float, params: AnalysisParams):
        self.kernel: GaussianKernel = make_gaussian_kernel(params.sigma)
        self.butter = design_butterworth(params.butter_cutoff_hz, fps, params.butter_order)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return butterworth_filtfilt(smooth(x, self.kernel), self.butter)


def _trunk_angle(hip_mid: np.ndarray, shoulder_mid: np.ndarray) -> np.ndarray:
    v = shoulder_mid - hip_mid
    horiz = np.hypot(v[:, 0], v[:, 2])
    return np.arctan2(horiz, v[:, 1])


def _build_signals(trial: TrialRecording, hip_mid: np.ndarray, shoulder_mid: np.ndarray,
                   hip_delta: np.ndarray, anterior: np.ndarray, filters: _Filters) -> CompositeSignals:
    fps = trial.fps
    lateral = np.cross(UP, anterior)
    lateral /= np.linalg.norm(lateral)
    ydot = filters.apply(derivative(hip_mid[:, 1], fps))
    zdot = filters.apply(derivative(shoulder_mid @ anterior, fps))
    theta = _trunk_angle(hip_mid, shoulder_mid)
    thetadot = filters.apply(derivative(theta, fps))
    sts = (STS_WEIGHT_HIP_RISE * ydot
           + STS_WEIGHT_SHOULDER_ADVANCE * zdot
           + STS_WEIGHT_TRUNK_PITCH * thetadot)
    hip_line = filters.apply(hip_delta @ lateral)
    hlv = derivative(hip_line, fps)
    for a in (sts, hip_line, hlv, theta, anterior, lateral):
        a.setflags(write=False)
    return CompositeSignals(sts=sts, hip_line=hip_line, hip_line_velocity=hlv,
                            trunk_angle=theta, fps=fps, anterior_axis=anterior,
                            lateral_axis=lateral)


def compute_signals(trial: TrialRecording, joints: JointIndexTable,
                    params: AnalysisParams = DEFAULT_PARAMS) -> CompositeSignals:
    """Derive the STS composite and hip-line series for one trial.

    Each velocity is Gaussian-smoothed then zero-phase Butterworth-filtered;
    the hip line is filtered the same way as a position series before being
    differentiated. Raises a domain error when the trial is shorter than the
    filter warm-up.
    """
    fps = trial.fps
    min_frames = 3 * (params.butter_order + 1) + 1
    if trial.n_frames < min_frames:
        raise DomainError(
            f"trial has {trial.n_frames} frames; zero-phase filtering needs >= {min_frames}")
    filters = _Filters(fps, params)
    pos = trial.positions
    hip_l = pos[:, joints.left_hip]
    hip_r = pos[:, joints.right_hip]
    hip_mid = 0.5 * (hip_l + hip_r)
    shoulder_mid = 0.5 * (pos[:, joints.left_shoulder] + pos[:, joints.right_shoulder])
    hip_delta = hip_r - hip_l

    anterior = _provisional_anterior(hip_mid)
    sig = _build_signals(trial, hip_mid, shoulder_mid, hip_delta, anterior, filters)
    refined = _refine_anterior(hip_mid, sig, params)
    if refined is not None and not np.allclose(refined, anterior, atol=1e-12):
        sig = _build_signals(trial, hip_mid, shoulder_mid, hip_delta, refined, filters)
    return sig


def _refine_anterior(hip_mid: np.ndarray, sig: CompositeSignals,
                     params: AnalysisParams) -> np.ndarray | None:
    # Final axis: hip displacement over the provisional first walking phase.
    # Any detection failure here just keeps the provisional axis; segment()
    # is where missing events become errors.
    try:
        sts1, sts2 = _detect_sts_peaks(sig.sts, params)
        turn1 = _detect_turn(sig.hip_line_velocity, sts1.end_frame, sts2.start_frame,
                             "positive", "turn1", params)
    except GaitugError:
        return None
    if turn1.start_frame <= sts1.end_frame:
        return None
    return _unit_or_none(_horizontal(hip_mid[turn1.start_frame] - hip_mid[sts1.end_frame]))


def _detect_sts_peaks(sts: np.ndarray, params: AnalysisParams) -> tuple[Peak, Peak]:
    found = {}
    for event, polarity in (("sts1", "positive"), ("sts2", "negative")):
        pk = adaptive_peak_params(sts, polarity, height_k=params.peak_height_k,
                                  dist_frac=params.peak_dist_frac, max_peaks=1)
        peaks = find_peaks(sts, pk, polarity)
        if not peaks:
            raise SegmentationError(f"no {polarity} STS peak above threshold", event=event)
        found[event] = peaks[0]
    return found["sts1"], found["sts2"]


def _detect_turn(hlv: np.ndarray, lo: int, hi: int, polarity: str, event: str,
                 params: AnalysisParams) -> Peak:
    if hi - lo + 1 < 3:
        raise SegmentationError(
            f"turn search window [{lo}, {hi}] too short", event=event)
    window = hlv[lo:hi + 1]
    pk = adaptive_peak_params(window, polarity, height_k=params.peak_height_k,
                              dist_frac=params.peak_dist_frac, max_peaks=1)
    peaks = find_peaks(window, pk, polarity)
    if not peaks:
        raise SegmentationError(f"no {polarity} hip-line velocity peak in "
                                f"[{lo}, {hi}]", event=event)
    p = peaks[0]
    return Peak(start_frame=p.start_frame + lo, peak_frame=p.peak_frame + lo,
                end_frame=p.end_frame + lo, peak_value=p.peak_value,
                prominence=p.prominence, polarity=p.polarity)


def segment(trial: TrialRecording, signals: CompositeSignals,
            params: AnalysisParams = DEFAULT_PARAMS) -> SubtaskSegmentation:
    """Locate STS-1, Turn-1, Turn-2, and STS-2.

    STS events are the largest positive/negative peaks of the composite under
    adaptive thresholds; turns are single peaks of the hip-line velocity
    searched between STS-1 end and STS-2 start. Chronology is validated, not
    forced: out-of-order events raise a segmentation error so callers can
    exclude the trial.
    """
    sts1, sts2 = _detect_sts_peaks(signals.sts, params)
    if sts1.peak_frame >= sts2.peak_frame:
        raise SegmentationError(
            f"sts1 peak frame {sts1.peak_frame} not before sts2 peak frame {sts2.peak_frame}",
            event="sts1")
    turn1 = _detect_turn(signals.hip_line_velocity, sts1.end_frame, sts2.start_frame,
                         "positive", "turn1", params)
    turn2 = _detect_turn(signals.hip_line_velocity, sts1.end_frame, sts2.start_frame,
                         "negative", "turn2", params)
    seg = SubtaskSegmentation(sts1=sts1, turn1=turn1, turn2=turn2, sts2=sts2, fps=signals.fps)
    order = [seg.event(e).peak_frame for e in seg.EVENTS]
    if not all(a <= b for a, b in zip(order, order[1:])):
        raise SegmentationError(
            "events out of chronological order: "
            + ", ".join(f"{e}@{f}" for e, f in zip(seg.EVENTS, order)),
            event="chronology")
    return seg


def segment_trial(trial: TrialRecording, joints: JointIndexTable,
                  params: AnalysisParams = DEFAULT_PARAMS
                  ) -> tuple[CompositeSignals, SubtaskSegmentation]:
    signals = compute_signals(trial, joints, params)
    return signals, segment(trial, signals, params)
