"""Step detection and spatiotemporal gait metrics for the walking phases.

Steps are local minima of the smoothed vertical ankle trajectories. Only
events inside the two walking phases are kept: outbound (STS-1 end to Turn-1
start) and inbound (Turn-1 end to Turn-2 start); anything inside a turn is
discarded. Step time / length / width are computed over successive
opposite-foot event pairs within a phase, using per-phase anterior axes
derived from net hip-midpoint displacement. All values are SI (seconds,
meters); unit conversion for reporting happens at the report layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_PARAMS, AnalysisParams
from .domain import JointIndexTable, TrialRecording
from .errors import DegenerateSignalError, DirectionError, InsufficientStepsError
from .segmentation import UP, SubtaskSegmentation, _horizontal, _unit_or_none
from .signals import adaptive_peak_params, find_peaks, make_gaussian_kernel, smooth

PHASES = ("outbound", "inbound")


@dataclass(frozen=True)
class StepEvent:
    foot: str  # "left" | "right"
    frame: int
    ankle_position: np.ndarray  # (3,) meters
    phase: str = ""


@dataclass(frozen=True)
class GaitMetrics:
    """Per-trial gait summary.

    The four per-interval lists are aligned: entry i covers the same
    opposite-foot event pair. Means/sds are None when undefined (sd needs
    n >= 2; symmetry needs both feet represented and a nonzero denominator).
    """

    step_times: list[float]
    step_lengths: list[float]
    step_widths: list[float]
    feet: list[str]
    phases: list[str]
    st_mean: float | None
    st_sd: float | None
    sl_mean: float | None
    sl_sd: float | None
    sw_mean: float | None
    sw_sd: float | None
    si_st: float | None
    si_sl: float | None
    si_sw: float | None
    n_steps: int


def phase_windows(seg: SubtaskSegmentation) -> dict[str, tuple[int, int]]:
    """Inclusive frame windows for the two walking phases."""
    return {
        "outbound": (seg.sts1.end_frame, seg.turn1.start_frame),
        "inbound": (seg.turn1.end_frame, seg.turn2.start_frame),
    }


def detect_steps(trial: TrialRecording, joints: JointIndexTable,
                 seg: SubtaskSegmentation,
                 params: AnalysisParams = DEFAULT_PARAMS) -> list[StepEvent]:
    """Per-foot ankle minima, windowed to the walking phases and merged.

    The height threshold is adaptive (mean + k*sd of the negated smoothed
    signal); the separation floor is step_min_separation_s, a refractory
    period rather than the composite-signal distance heuristic. Fewer than
    two retained events in either walking phase raises insufficient-steps.
    """
    kernel = make_gaussian_kernel(params.sigma)
    min_sep = max(1, round(params.step_min_separation_s * trial.fps))
    windows = phase_windows(seg)
    events: list[StepEvent] = []
    for foot, joint in (("left", "left_ankle"), ("right", "right_ankle")):
        traj = trial.joint(joints, joint)
        y = smooth(traj[:, 1], kernel)
        try:
            pk = adaptive_peak_params(y, "negative", height_k=params.peak_height_k,
                                      min_distance=min_sep)
        except DegenerateSignalError:
            continue  # flat ankle: no step candidates from this foot
        for p in find_peaks(y, pk, "negative"):
            for phase, (lo, hi) in windows.items():
                if lo <= p.peak_frame <= hi:
                    events.append(StepEvent(foot=foot, frame=p.peak_frame,
                                            ankle_position=traj[p.peak_frame].copy(),
                                            phase=phase))
                    break
    events.sort(key=lambda e: (e.frame, e.foot))
    for phase in PHASES:
        n = sum(1 for e in events if e.phase == phase)
        if n < 2:
            raise InsufficientStepsError(
                f"{phase} phase has {n} step event(s); need >= 2")
    return events


def step_time(events: list[StepEvent], fps: float) -> list[float]:
    """Successive inter-event intervals in seconds, opposite feet only."""
    out = []
    for a, b in zip(events, events[1:]):
        if a.foot != b.foot:
            out.append((b.frame - a.frame) / fps)
    return out


def step_length_width(events: list[StepEvent],
                      anterior_axis: np.ndarray) -> tuple[list[float], list[float]]:
    """Absolute displacement between successive opposite-foot ankle positions,
    projected on the anterior axis (length) and the horizontal lateral axis
    (width)."""
    a = np.asarray(anterior_axis, dtype=float)
    norm = float(np.linalg.norm(a))
    if norm < 1e-9:
        raise DirectionError("anterior axis has zero length")
    if abs(norm - 1.0) > 1e-6:
        raise DirectionError(f"anterior axis must be unit length, |a| = {norm}")
    lateral = np.cross(UP, a)
    lnorm = float(np.linalg.norm(lateral))
    if lnorm < 1e-9:
        raise DirectionError("anterior axis is vertical; lateral axis undefined")
    lateral /= lnorm
    lengths, widths = [], []
    for e1, e2 in zip(events, events[1:]):
        if e1.foot == e2.foot:
            continue
        d = e2.ankle_position - e1.ankle_position
        lengths.append(abs(float(d @ a)))
        widths.append(abs(float(d @ lateral)))
    return lengths, widths


def phase_anterior_axis(trial: TrialRecording, joints: JointIndexTable,
                        lo: int, hi: int) -> np.ndarray:
    """Unit horizontal hip-midpoint displacement across frames [lo, hi]."""
    pos = trial.positions
    hip_mid = 0.5 * (pos[:, joints.left_hip] + pos[:, joints.right_hip])
    axis = _unit_or_none(_horizontal(hip_mid[hi] - hip_mid[lo]))
    if axis is None:
        raise DirectionError(
            f"no net horizontal hip displacement over frames [{lo}, {hi}]")
    return axis


def _mean(v: list[float]) -> float | None:
    return float(np.mean(v)) if v else None


def _sample_sd(v: list[float]) -> float | None:
    return float(np.std(v, ddof=1)) if len(v) >= 2 else None


def _symmetry_index(values: list[float], feet: list[str]) -> float | None:
    left = [v for v, f in zip(values, feet) if f == "left"]
    right = [v for v, f in zip(values, feet) if f == "right"]
    if not left or not right:
        return None
    ml, mr = float(np.mean(left)), float(np.mean(right))
    denom = 0.5 * (ml + mr)
    if denom == 0.0:
        return None
    return abs(ml - mr) / denom * 100.0


def summarize(step_times: list[float], step_lengths: list[float],
              step_widths: list[float], feet: list[str],
              phases: list[str]) -> GaitMetrics:
    """Means, sample standard deviations (n-1), and per-foot symmetry indices
    SI = |mean_L - mean_R| / (0.5 * (mean_L + mean_R)) * 100."""
    n = len(step_times)
    if not (n == len(step_lengths) == len(step_widths) == len(feet) == len(phases)):
        raise ValueError("metric lists must be aligned")
    return GaitMetrics(
        step_times=list(step_times), step_lengths=list(step_lengths),
        step_widths=list(step_widths), feet=list(feet), phases=list(phases),
        st_mean=_mean(step_times), st_sd=_sample_sd(step_times),
        sl_mean=_mean(step_lengths), sl_sd=_sample_sd(step_lengths),
        sw_mean=_mean(step_widths), sw_sd=_sample_sd(step_widths),
        si_st=_symmetry_index(step_times, feet),
        si_sl=_symmetry_index(step_lengths, feet),
        si_sw=_symmetry_index(step_widths, feet),
        n_steps=n)


def compute_gait_metrics(trial: TrialRecording, joints: JointIndexTable,
                         seg: SubtaskSegmentation,
                         params: AnalysisParams = DEFAULT_PARAMS) -> GaitMetrics:
    """Full per-trial gait metric computation over both walking phases.

    Each interval is attributed to the foot that lands it (the second event
    of the pair). Intervals never span a phase boundary.
    """
    events = detect_steps(trial, joints, seg, params)
    windows = phase_windows(seg)
    times, lengths, widths, feet, phase_tags = [], [], [], [], []
    for phase in PHASES:
        lo, hi = windows[phase]
        phase_events = [e for e in events if e.phase == phase]
        axis = phase_anterior_axis(trial, joints, lo, hi)
        ts = step_time(phase_events, trial.fps)
        ls, ws = step_length_width(phase_events, axis)
        landing_feet = [b.foot for a, b in zip(phase_events, phase_events[1:])
                        if a.foot != b.foot]
        times.extend(ts)
        lengths.extend(ls)
        widths.extend(ws)
        feet.extend(landing_feet)
        phase_tags.extend([phase] * len(ts))
    return summarize(times, lengths, widths, feet, phase_tags)
