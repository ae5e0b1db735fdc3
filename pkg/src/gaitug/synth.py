"""Synthetic TUG trials with exact ground truth.

The generator scripts a full trial on a continuous timeline: sit, sit-to-stand
(hip rises 0.35 m with cosine easing while the trunk flexes then extends),
outbound walk with scripted foot contacts, a 180-degree turn, inbound walk,
second turn, stand-to-sit, sit. Every quantity the detectors consume has a
closed form, so ground truth comes from the script itself rather than from
the analysis pipeline:

* STS and turn event extents are computed from the analytic composite and
  hip-line-velocity series on a fine time grid, passed through the nominal
  filter response in the frequency domain (Gaussian transfer function times
  the squared Butterworth magnitude, i.e. the zero-phase cascade). This is an
  independent realization of the measurand: no shared code with the
  time-domain biquad/convolution pipeline.
* Step events are stance-phase bowls (cosine dips) carved into the ankle
  height, centered exactly on capture-grid frames, so a noiseless trial is
  recovered frame-exact. Turn repositioning steps are scripted inside turn
  intervals and reported separately (they must be excluded downstream).
* Insole streams carry one gyro-z burst per swing (0.2 s, ending at contact)
  and a vertical-acceleration bump at each contact, so the gyro peak leads
  the accel peak by 0.1 s, inside the 150 ms corroboration window.

Geometry constants are rough anthropometrics; nothing downstream depends on
their exact values, only on the margins they create between event signatures
(verified by the acceptance suite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import (DEFAULT_JOINT_INDICES, FallRiskCovariates, ImuRecording,
                     ImuSideStream, N_JOINTS, TrialRecording)
from .errors import ConfigError

HIP_WIDTH = 0.22
SHOULDER_WIDTH = 0.32
HIP_Y_SEATED = 0.45
HIP_Y_STANDING = 0.80
TRUNK_VERTICAL = 0.35
LEAN_SEATED = 0.05
LEAN_PEAK = 0.45
LEAN_STANDING = 0.10
ANKLE_HEIGHT = 0.08
SWING_LIFT = 0.08
STANCE_DIP = 0.02
SIT_FOOT_Z = 0.10
GRAVITY = 9.81
GYRO_BURST_AMP = 150.0   # deg/s
GYRO_BURST_DUR = 0.2     # s, ends at contact
ACCEL_BUMP_AMP = 15.0    # m/s^2 above gravity
ACCEL_BUMP_HALF = 0.08   # s
LEAD_S = 1.0
PAUSE_AFTER_STS1_S = 0.6
PAUSE_AFTER_TURN_S = 0.2
PAUSE_BEFORE_STS2_S = 0.3
TAIL_S = 1.0
SWING_FRAC = 0.4         # of the stride period
RAMP_S = 0.4             # hip translation ease-in/out
FINE_OVERSAMPLE = 8


@dataclass(frozen=True)
class SynthConfig:
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

    def __post_init__(self):
        def positive(name):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive and finite, got {v!r}")
        for name in ("fps", "imu_fps", "step_length_m", "step_width_m",
                     "cadence_steps_per_s", "sts1_duration_s", "sts2_duration_s",
                     "turn_duration_s", "walkway_length_m"):
            positive(name)
        if self.noise_sd_m < 0 or not math.isfinite(self.noise_sd_m):
            raise ConfigError(f"noise_sd_m must be >= 0, got {self.noise_sd_m}")
        if self.fps < 20:
            raise ConfigError(f"fps must be >= 20 for the 2 Hz filter chain, got {self.fps}")
        if self.imu_fps < 30:
            raise ConfigError(f"imu_fps must be >= 30, got {self.imu_fps}")
        if self.walkway_length_m < self.step_length_m:
            raise ConfigError("walkway shorter than one step")
        if self.n_steps_each_way < 2:
            raise ConfigError(
                f"walkway {self.walkway_length_m} m at step length {self.step_length_m} m "
                "yields fewer than 2 steps each way")
        if not 0.8 <= self.cadence_steps_per_s <= 2.0:
            raise ConfigError(
                f"cadence must lie in [0.8, 2.0] steps/s, got {self.cadence_steps_per_s}")
        if self.sts1_duration_s < 0.5 or self.sts2_duration_s < 0.5:
            raise ConfigError("STS durations must be >= 0.5 s")
        if self.turn_duration_s < 0.8:
            raise ConfigError("turn duration must be >= 0.8 s")
        if self.sts2_duration_s > 1.58 * self.sts1_duration_s:
            raise ConfigError(
                "sts2_duration_s must be <= 1.58 * sts1_duration_s so the stand-to-sit "
                "trough dominates the sit-to-stand extension dip")
        if self.sts1_duration_s > 2.2 * self.sts2_duration_s:
            raise ConfigError("sts1_duration_s must be <= 2.2 * sts2_duration_s")

    @property
    def n_steps_each_way(self) -> int:
        return round(self.walkway_length_m / self.step_length_m)


@dataclass(frozen=True)
class TruthEvent:
    start_frame: float
    peak_frame: float
    end_frame: float

    @property
    def duration_frames(self) -> float:
        return self.end_frame - self.start_frame


@dataclass(frozen=True)
class TruthStep:
    frame: int
    foot: str
    phase: str  # outbound | inbound | turn1 | turn2
    x: float
    z: float


@dataclass(frozen=True)
class GroundTruth:
    fps: float
    imu_fps: float
    n_frames: int
    events: dict[str, TruthEvent]          # sts1, turn1, turn2, sts2
    windows: dict[str, tuple[int, int]]    # scripted frame windows
    steps: tuple[TruthStep, ...]           # walking-phase events only
    turn_steps: tuple[TruthStep, ...]      # scripted mid-turn repositioning
    step_times_s: tuple[float, ...]
    true_step_length_m: float
    true_step_width_m: float
    true_step_time_s: float
    imu_events: dict[str, tuple[int, ...]]
    imu_step_times_s: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "fps": self.fps,
            "imu_fps": self.imu_fps,
            "n_frames": self.n_frames,
            "events": {k: {"start_frame": e.start_frame, "peak_frame": e.peak_frame,
                           "end_frame": e.end_frame,
                           "duration_frames": e.duration_frames,
                           "duration_s": e.duration_frames / self.fps}
                       for k, e in self.events.items()},
            "windows": {k: list(v) for k, v in self.windows.items()},
            "steps": [{"frame": s.frame, "foot": s.foot, "phase": s.phase,
                       "x": s.x, "z": s.z} for s in self.steps],
            "turn_steps": [{"frame": s.frame, "foot": s.foot, "phase": s.phase,
                            "x": s.x, "z": s.z} for s in self.turn_steps],
            "step_times_s": list(self.step_times_s),
            "true_step_length_m": self.true_step_length_m,
            "true_step_width_m": self.true_step_width_m,
            "true_step_time_s": self.true_step_time_s,
            "imu_events": {k: list(v) for k, v in self.imu_events.items()},
            "imu_step_times_s": list(self.imu_step_times_s),
        }


@dataclass(frozen=True)
class SynthResult:
    trial: TrialRecording
    imu: ImuRecording
    truth: GroundTruth
    config: SynthConfig


# ---------------------------------------------------------------------------
# Easing primitives (value and time derivative)

def _ease(u):
    return 0.5 * (1.0 - np.cos(np.pi * np.clip(u, 0.0, 1.0)))


def _ease_rate(u, dur):
    u = np.asarray(u)
    inside = (u > 0) & (u < 1)
    return np.where(inside, 0.5 * np.pi * np.sin(np.pi * np.clip(u, 0.0, 1.0)) / dur, 0.0)


class _EaseTrack:
    """Piecewise constant-or-eased scalar track with analytic rate."""

    def __init__(self, initial: float):
        self.initial = initial
        self.segs: list[tuple[float, float, float, float]] = []  # t0, t1, v0, v1

    def ease_to(self, t0: float, t1: float, v1: float):
        v0 = self.value_at(t0)
        self.segs.append((t0, t1, v0, v1))

    def value_at(self, t: float) -> float:
        v = self.initial
        for t0, t1, v0, v1 in self.segs:
            if t >= t1:
                v = v1
            elif t > t0:
                v = v0 + (v1 - v0) * float(_ease((t - t0) / (t1 - t0)))
        return v

    def value(self, t: np.ndarray) -> np.ndarray:
        out = np.full_like(t, self.initial, dtype=float)
        for t0, t1, v0, v1 in self.segs:
            u = (t - t0) / (t1 - t0)
            out = np.where(t >= t0, v0 + (v1 - v0) * _ease(u), out)
        return out

    def rate(self, t: np.ndarray) -> np.ndarray:
        out = np.zeros_like(t, dtype=float)
        for t0, t1, v0, v1 in self.segs:
            u = (t - t0) / (t1 - t0)
            out = out + (v1 - v0) * _ease_rate(u, t1 - t0)
        return out


def _trap_pos(u: np.ndarray, dur: float, dist: float, ramp: float) -> np.ndarray:
    """Cosine-cornered trapezoidal translation profile on t in [0, dur]."""
    v = dist / (dur - ramp)
    t = np.clip(u, 0.0, dur)
    out = np.zeros_like(t)
    m1 = t <= ramp
    out = np.where(m1, 0.5 * v * (t - ramp / np.pi * np.sin(np.pi * t / np.clip(ramp, 1e-12, None))), out)
    m2 = (t > ramp) & (t <= dur - ramp)
    out = np.where(m2, 0.5 * v * ramp + v * (t - ramp), out)
    m3 = t > dur - ramp
    s = dur - t
    tail = 0.5 * v * (s - ramp / np.pi * np.sin(np.pi * s / np.clip(ramp, 1e-12, None)))
    out = np.where(m3, dist - tail, out)
    return out


def _trap_rate(u: np.ndarray, dur: float, dist: float, ramp: float) -> np.ndarray:
    v = dist / (dur - ramp)
    t = u
    out = np.zeros_like(np.asarray(t, dtype=float))
    inside = (t > 0) & (t < dur)
    tr = np.clip(t, 0.0, dur)
    r1 = 0.5 * v * (1.0 - np.cos(np.pi * tr / np.clip(ramp, 1e-12, None)))
    r3 = 0.5 * v * (1.0 - np.cos(np.pi * (dur - tr) / np.clip(ramp, 1e-12, None)))
    out = np.where(inside & (tr <= ramp), r1, out)
    out = np.where(inside & (tr > ramp) & (tr <= dur - ramp), v, out)
    out = np.where(inside & (tr > dur - ramp), r3, out)
    return out


class _TransTrack:
    """Sum of trapezoidal translations (hip forward/back motion)."""

    def __init__(self, initial: float):
        self.initial = initial
        self.moves: list[tuple[float, float, float, float]] = []  # t0, dur, dist, ramp

    def translate(self, t0: float, t1: float, dist: float, ramp: float = RAMP_S):
        dur = t1 - t0
        if dur <= 2.5 * ramp:
            ramp = dur / 4.0
        self.moves.append((t0, dur, dist, ramp))

    def value(self, t: np.ndarray) -> np.ndarray:
        out = np.full_like(t, self.initial, dtype=float)
        for t0, dur, dist, ramp in self.moves:
            out = out + _trap_pos(t - t0, dur, dist, ramp)
        return out

    def rate(self, t: np.ndarray) -> np.ndarray:
        out = np.zeros_like(t, dtype=float)
        for t0, dur, dist, ramp in self.moves:
            out = out + _trap_rate(t - t0, dur, dist, ramp)
        return out


# ---------------------------------------------------------------------------
# Timeline script

@dataclass
class _Contact:
    t: float
    x: float
    z: float
    bowl_half: float  # 0 = no stance bowl (no step event)
    phase: str        # outbound | inbound | turn1 | turn2 | none


class _Script:
    def __init__(self, cfg: SynthConfig):
        self.cfg = cfg
        cad = cfg.cadence_steps_per_s
        n = cfg.n_steps_each_way
        sl = cfg.step_length_m
        d1, d2, dt = cfg.sts1_duration_s, cfg.sts2_duration_s, cfg.turn_duration_s

        self.t_sts1 = LEAD_S
        self.t_sts1e = self.t_sts1 + d1
        self.t_walk1 = self.t_sts1e + PAUSE_AFTER_STS1_S
        self.out_contacts_t = [self.t_walk1 + (k + 1) / cad for k in range(n)]
        self.t_turn1 = self.out_contacts_t[-1] + 1.5 / cad
        self.t_turn1e = self.t_turn1 + dt
        self.t_walk2 = self.t_turn1e + PAUSE_AFTER_TURN_S
        self.in_contacts_t = [self.t_walk2 + (k + 1) / cad for k in range(n)]
        self.t_turn2 = self.in_contacts_t[-1] + 1.5 / cad
        self.t_turn2e = self.t_turn2 + dt
        self.t_sts2 = self.t_turn2e + PAUSE_BEFORE_STS2_S
        self.t_sts2e = self.t_sts2 + d2
        self.total_s = self.t_sts2e + TAIL_S
        self.walk_length = n * sl

        # Trunk-lean and hip-height tracks: flex-then-extend lean produces the
        # dominant biphasic STS lobes; yaw drives the hip line.
        self.hip_y = _EaseTrack(HIP_Y_SEATED)
        self.hip_y.ease_to(self.t_sts1, self.t_sts1e, HIP_Y_STANDING)
        self.hip_y.ease_to(self.t_sts2, self.t_sts2e, HIP_Y_SEATED)

        self.lean = _EaseTrack(LEAN_SEATED)
        self.lean.ease_to(self.t_sts1, self.t_sts1 + 0.5 * d1, LEAN_PEAK)
        self.lean.ease_to(self.t_sts1 + 0.5 * d1, self.t_sts1e, LEAN_STANDING)
        self.lean.ease_to(self.t_sts2, self.t_sts2 + 0.5 * d2, LEAN_PEAK)
        self.lean.ease_to(self.t_sts2 + 0.5 * d2, self.t_sts2e, LEAN_SEATED)

        self.yaw = _EaseTrack(0.0)
        self.yaw.ease_to(self.t_turn1, self.t_turn1e, math.pi)
        self.yaw.ease_to(self.t_turn2, self.t_turn2e, 2.0 * math.pi)

        self.hip_z = _TransTrack(0.0)
        self.hip_z.translate(self.t_walk1 + 0.1, self.t_turn1 - 0.1, self.walk_length)
        self.hip_z.translate(self.t_walk2 + 0.1, self.t_turn2 - 0.1, -self.walk_length)

        self._build_feet()

    # -- feet ---------------------------------------------------------------

    def _side_x(self, side: str, yaw: float) -> float:
        # body-right axis is (-cos yaw, 0, sin yaw); ankles sit at +-SW/2 along it
        sign = 1.0 if side == "right" else -1.0
        return sign * (self.cfg.step_width_m / 2.0) * (-math.cos(yaw))

    def _build_feet(self):
        cfg = self.cfg
        cad = cfg.cadence_steps_per_s
        n = cfg.n_steps_each_way
        sl = cfg.step_length_m
        self.stride_s = 2.0 / cad
        self.swing_s = SWING_FRAC * self.stride_s
        bowl_walk = 0.6 / cad - 0.5 / cfg.fps
        bowl_turn = min(0.2, bowl_walk)

        feet = ("right", "left")  # right leads
        contacts: dict[str, list[_Contact]] = {
            "left": [_Contact(0.0, self._side_x("left", 0.0), SIT_FOOT_Z, 0.0, "none")],
            "right": [_Contact(0.0, self._side_x("right", 0.0), SIT_FOOT_Z, 0.0, "none")],
        }
        seq: list[tuple[str, _Contact]] = []

        for k in range(n):
            foot = feet[k % 2]
            c = _Contact(self.out_contacts_t[k], self._side_x(foot, 0.0),
                         (k + 1) * sl, bowl_walk, "outbound")
            contacts[foot].append(c)
            seq.append((foot, c))
        turn1_foot = feet[n % 2]
        c = _Contact(self.t_turn1 + 0.3 * cfg.turn_duration_s,
                     self._side_x(turn1_foot, math.pi), self.walk_length,
                     bowl_turn, "turn1")
        contacts[turn1_foot].append(c)
        seq.append((turn1_foot, c))
        for k in range(n):
            foot = feet[(n + 1 + k) % 2]
            c = _Contact(self.in_contacts_t[k], self._side_x(foot, math.pi),
                         self.walk_length - (k + 1) * sl, bowl_walk, "inbound")
            contacts[foot].append(c)
            seq.append((foot, c))
        turn2_foot = feet[(2 * n + 1) % 2]
        c = _Contact(self.t_turn2 + 0.3 * cfg.turn_duration_s,
                     self._side_x(turn2_foot, 2.0 * math.pi), SIT_FOOT_Z,
                     bowl_turn, "turn2")
        contacts[turn2_foot].append(c)
        seq.append((turn2_foot, c))
        # The other foot squares up late in turn 2 with no stance bowl: a real
        # swing (IMU burst) but no video step event.
        other = feet[(2 * n) % 2]
        c = _Contact(self.t_turn2 + 0.75 * cfg.turn_duration_s,
                     self._side_x(other, 2.0 * math.pi), SIT_FOOT_Z, 0.0, "turn2")
        contacts[other].append(c)
        seq.append((other, c))

        self.foot_contacts = contacts
        self.contact_seq = seq

    def snap_frame(self, t: float) -> int:
        return round(t * self.cfg.fps)

    def bowl_center_frame(self, c: _Contact) -> int:
        return self.snap_frame(c.t + c.bowl_half)

    def ankle_series(self, frame_t: np.ndarray, side: str) -> np.ndarray:
        cs = self.foot_contacts[side]
        fps = self.cfg.fps
        x = np.full_like(frame_t, cs[0].x)
        z = np.full_like(frame_t, cs[0].z)
        y = np.full_like(frame_t, ANKLE_HEIGHT)
        for prev, nxt in zip(cs, cs[1:]):
            swing_start = max(prev.t, nxt.t - self.swing_s)
            dur = nxt.t - swing_start
            u = (frame_t - swing_start) / dur
            m = (frame_t >= swing_start) & (frame_t < nxt.t)
            x = np.where(m, prev.x + (nxt.x - prev.x) * _ease(u), x)
            z = np.where(m, prev.z + (nxt.z - prev.z) * _ease(u), z)
            y = np.where(m, ANKLE_HEIGHT + SWING_LIFT * np.sin(np.pi * np.clip(u, 0, 1)), y)
            after = frame_t >= nxt.t
            x = np.where(after, nxt.x, x)
            z = np.where(after, nxt.z, z)
        for c in cs:
            if c.bowl_half <= 0:
                continue
            center = self.bowl_center_frame(c) / fps
            u = (frame_t - center) / c.bowl_half
            m = np.abs(u) <= 1.0
            y = np.where(m, y - STANCE_DIP * 0.5 * (1.0 + np.cos(np.pi * np.clip(u, -1, 1))), y)
        return np.stack([x, y, z], axis=1)

    # -- analytic composite -------------------------------------------------

    def composite(self, t: np.ndarray) -> np.ndarray:
        h = self.lean.value(t)
        hdot = self.lean.rate(t)
        psi = self.yaw.value(t)
        psidot = self.yaw.rate(t)
        y_dot = self.hip_y.rate(t)
        z_dot = self.hip_z.rate(t) + hdot * np.cos(psi) - h * np.sin(psi) * psidot
        theta_dot = hdot * TRUNK_VERTICAL / (TRUNK_VERTICAL ** 2 + h ** 2)
        return 1.0 * y_dot + 0.7 * z_dot + 0.5 * theta_dot

    def hip_line_velocity(self, t: np.ndarray) -> np.ndarray:
        psi = self.yaw.value(t)
        psidot = self.yaw.rate(t)
        return HIP_WIDTH * np.sin(psi) * psidot


# ---------------------------------------------------------------------------
# Ground-truth event extraction on a fine grid

def _nominal_response(freq: np.ndarray, fps: float) -> np.ndarray:
    """Transfer function of the nominal measurement chain: Gaussian smoothing
    (sigma = 3 samples at the video rate) times the squared magnitude of a
    4th-order 2 Hz Butterworth (zero-phase forward-backward pass)."""
    sigma_t = 3.0 / fps
    gauss = np.exp(-0.5 * (2.0 * np.pi * freq * sigma_t) ** 2)
    butter2 = 1.0 / (1.0 + (freq / 2.0) ** 8)
    return gauss * butter2


def _filter_fine(x: np.ndarray, fs: float, fps: float) -> np.ndarray:
    freq = np.fft.rfftfreq(x.size, d=1.0 / fs)
    return np.fft.irfft(np.fft.rfft(x) * _nominal_response(freq, fps), n=x.size)


def _extent_crossing(x: np.ndarray, peak: int, ref: float, direction: int) -> float:
    """Fractional index of the first crossing at or below ref, walking from
    the peak in the given direction. Linear interpolation between samples."""
    i = peak
    while 0 <= i + direction < x.size and x[i + direction] > ref:
        i += direction
    j = i + direction
    if j < 0 or j >= x.size:
        return float(i)
    if x[j] == x[i]:
        return float(j)
    frac = (x[i] - ref) / (x[i] - x[j])
    return i + direction * min(max(frac, 0.0), 1.0)


def _truth_event(x: np.ndarray, fs: float, fps: float, lo_t: float, hi_t: float,
                 positive: bool) -> TruthEvent:
    """Peak and half-prominence extent of the dominant lobe inside [lo_t, hi_t],
    computed on the fine grid with an implementation independent from the
    analysis pipeline."""
    w = x if positive else -x
    lo = max(0, int(math.floor(lo_t * fs)))
    hi = min(w.size, int(math.ceil(hi_t * fs)) + 1)
    peak = lo + int(np.argmax(w[lo:hi]))
    left_min = w[peak]
    i = peak
    while i > 0 and w[i - 1] <= w[peak]:
        i -= 1
        left_min = min(left_min, w[i])
    right_min = w[peak]
    i = peak
    while i < w.size - 1 and w[i + 1] <= w[peak]:
        i += 1
        right_min = min(right_min, w[i])
    prominence = w[peak] - max(left_min, right_min)
    ref = w[peak] - prominence / 2.0
    start = _extent_crossing(w, peak, ref, -1)
    end = _extent_crossing(w, peak, ref, +1)
    scale = fps / fs
    # Extents live on the capture grid: the first at-or-below-reference sample
    # on each side, i.e. floor/ceil of the continuous crossing position.
    return TruthEvent(start_frame=float(math.floor(start * scale)),
                      peak_frame=float(round(peak * scale)),
                      end_frame=float(math.ceil(end * scale)))


# ---------------------------------------------------------------------------
# Body assembly

def _assemble_positions(script: _Script, frame_t: np.ndarray) -> np.ndarray:
    cfg = script.cfg
    n = frame_t.size
    up = np.array([0.0, 1.0, 0.0])

    psi = script.yaw.value(frame_t)
    a_hat = np.stack([np.sin(psi), np.zeros(n), np.cos(psi)], axis=1)
    r_hat = np.stack([-np.cos(psi), np.zeros(n), np.sin(psi)], axis=1)

    hip_mid = np.stack([np.zeros(n), script.hip_y.value(frame_t),
                        script.hip_z.value(frame_t)], axis=1)
    lean = script.lean.value(frame_t)[:, None]
    shoulder_mid = hip_mid + lean * a_hat + TRUNK_VERTICAL * up

    left_hip = hip_mid - 0.5 * HIP_WIDTH * r_hat
    right_hip = hip_mid + 0.5 * HIP_WIDTH * r_hat
    left_shoulder = shoulder_mid - 0.5 * SHOULDER_WIDTH * r_hat
    right_shoulder = shoulder_mid + 0.5 * SHOULDER_WIDTH * r_hat
    left_ankle = script.ankle_series(frame_t, "left")
    right_ankle = script.ankle_series(frame_t, "right")

    pos = np.zeros((n, N_JOINTS, 3))
    idx = DEFAULT_JOINT_INDICES
    pos[:, idx["left_hip"]] = left_hip
    pos[:, idx["right_hip"]] = right_hip
    pos[:, idx["left_ankle"]] = left_ankle
    pos[:, idx["right_ankle"]] = right_ankle
    pos[:, idx["left_shoulder"]] = left_shoulder
    pos[:, idx["right_shoulder"]] = right_shoulder

    # Remaining joints ride rigidly on the hip/shoulder frame (knees and feet
    # follow the legs); detectors must not depend on them.
    pos[:, 0] = hip_mid
    pos[:, 3] = hip_mid + 0.25 * (shoulder_mid - hip_mid)
    pos[:, 6] = hip_mid + 0.50 * (shoulder_mid - hip_mid)
    pos[:, 9] = hip_mid + 0.75 * (shoulder_mid - hip_mid)
    pos[:, 12] = shoulder_mid + 0.05 * up
    pos[:, 15] = shoulder_mid + 0.18 * up + 0.03 * a_hat
    pos[:, 13] = shoulder_mid - 0.08 * r_hat
    pos[:, 14] = shoulder_mid + 0.08 * r_hat
    pos[:, 4] = 0.5 * (left_hip + left_ankle) + 0.03 * a_hat
    pos[:, 5] = 0.5 * (right_hip + right_ankle) + 0.03 * a_hat
    pos[:, 10] = left_ankle + 0.12 * a_hat - 0.04 * up
    pos[:, 11] = right_ankle + 0.12 * a_hat - 0.04 * up
    pos[:, 18] = left_shoulder - 0.02 * r_hat - 0.26 * up + 0.02 * a_hat
    pos[:, 19] = right_shoulder + 0.02 * r_hat - 0.26 * up + 0.02 * a_hat
    pos[:, 20] = pos[:, 18] - 0.24 * up + 0.05 * a_hat
    pos[:, 21] = pos[:, 19] - 0.24 * up + 0.05 * a_hat
    pos[:, 22] = pos[:, 20] + 0.08 * a_hat - 0.02 * up
    pos[:, 23] = pos[:, 21] + 0.08 * a_hat - 0.02 * up
    return pos


# ---------------------------------------------------------------------------
# Insole streams

def _imu_streams(script: _Script, rng: np.random.Generator):
    cfg = script.cfg
    ifs = cfg.imu_fps
    n = int(round(script.total_s * ifs)) + 1
    t = np.arange(n) / ifs
    accel = {s: np.zeros((n, 3)) for s in ("left", "right")}
    gyro = {s: np.zeros((n, 3)) for s in ("left", "right")}
    for a in accel.values():
        a[:, 1] = GRAVITY
    events: dict[str, list[int]] = {"left": [], "right": []}

    for foot, c in script.contact_seq:
        g_center = round((c.t - GYRO_BURST_DUR / 2.0) * ifs) / ifs
        u = (t - (g_center - GYRO_BURST_DUR / 2.0)) / GYRO_BURST_DUR
        m = (u >= 0.0) & (u <= 1.0)
        gyro[foot][:, 2] += np.where(m, GYRO_BURST_AMP * np.sin(np.pi * np.clip(u, 0, 1)), 0.0)
        events[foot].append(int(round(g_center * ifs)))

        a_center = round(c.t * ifs) / ifs
        v = (t - a_center) / ACCEL_BUMP_HALF
        m = np.abs(v) <= 1.0
        accel[foot][:, 1] += np.where(
            m, ACCEL_BUMP_AMP * 0.5 * (1.0 + np.cos(np.pi * np.clip(v, -1, 1))), 0.0)

    if cfg.noise_sd_m > 0:
        accel_sd = 200.0 * cfg.noise_sd_m
        gyro_sd = 800.0 * cfg.noise_sd_m
        for s in ("left", "right"):
            accel[s] += rng.normal(0.0, accel_sd, accel[s].shape)
            gyro[s] += rng.normal(0.0, gyro_sd, gyro[s].shape)

    left = ImuSideStream(accel=accel["left"], gyro=gyro["left"])
    right = ImuSideStream(accel=accel["right"], gyro=gyro["right"])
    rec = ImuRecording(participant_id=cfg.participant_id,
                       trial_index=cfg.trial_index, fps=ifs,
                       left=left, right=right)
    return rec, {s: tuple(sorted(v)) for s, v in events.items()}


def _merged_imu_step_times(events: dict[str, tuple[int, ...]], ifs: float) -> tuple[float, ...]:
    merged = sorted([(i, "left") for i in events["left"]] +
                    [(i, "right") for i in events["right"]])
    out = []
    for (i0, f0), (i1, f1) in zip(merged, merged[1:]):
        if f0 != f1:
            out.append((i1 - i0) / ifs)
    return tuple(out)


# ---------------------------------------------------------------------------
# Public entry points

def generate(cfg: SynthConfig) -> SynthResult:
    """Generate one synthetic TUG trial with its insole streams and ground truth."""
    script = _Script(cfg)
    fps = cfg.fps
    n_frames = int(round(script.total_s * fps)) + 1
    frame_t = np.arange(n_frames) / fps

    rng = np.random.default_rng(cfg.seed)
    positions = _assemble_positions(script, frame_t)
    if cfg.noise_sd_m > 0:
        positions = positions + rng.normal(0.0, cfg.noise_sd_m, positions.shape)

    trial = TrialRecording(participant_id=cfg.participant_id,
                           trial_index=cfg.trial_index, fps=fps,
                           positions=positions)

    imu, imu_events = _imu_streams(script, rng)

    fine_fs = FINE_OVERSAMPLE * fps
    n_fine = int(round(script.total_s * fine_fs)) + 1
    t_fine = np.arange(n_fine) / fine_fs
    comp = _filter_fine(script.composite(t_fine), fine_fs, fps)
    hlv = _filter_fine(script.hip_line_velocity(t_fine), fine_fs, fps)

    pad = 0.3
    events = {
        "sts1": _truth_event(comp, fine_fs, fps, script.t_sts1 - pad,
                             script.t_sts1e + pad, positive=True),
        "sts2": _truth_event(comp, fine_fs, fps, script.t_sts2 - pad,
                             script.t_sts2e + pad, positive=False),
        "turn1": _truth_event(hlv, fine_fs, fps, script.t_turn1,
                              script.t_turn1e, positive=True),
        "turn2": _truth_event(hlv, fine_fs, fps, script.t_turn2,
                              script.t_turn2e, positive=False),
    }
    windows = {
        "sts1": (script.snap_frame(script.t_sts1), script.snap_frame(script.t_sts1e)),
        "turn1": (script.snap_frame(script.t_turn1), script.snap_frame(script.t_turn1e)),
        "turn2": (script.snap_frame(script.t_turn2), script.snap_frame(script.t_turn2e)),
        "sts2": (script.snap_frame(script.t_sts2), script.snap_frame(script.t_sts2e)),
    }

    steps = []
    turn_steps = []
    for foot, c in script.contact_seq:
        if c.bowl_half <= 0:
            continue
        ts = TruthStep(frame=script.bowl_center_frame(c), foot=foot,
                       phase=c.phase, x=c.x, z=c.z)
        if c.phase in ("outbound", "inbound"):
            steps.append(ts)
        else:
            turn_steps.append(ts)

    step_times = []
    for phase in ("outbound", "inbound"):
        frames = [s.frame for s in steps if s.phase == phase]
        step_times.extend(float(b - a) / fps for a, b in zip(frames, frames[1:]))

    truth = GroundTruth(
        fps=fps, imu_fps=cfg.imu_fps, n_frames=n_frames,
        events=events, windows=windows,
        steps=tuple(steps), turn_steps=tuple(turn_steps),
        step_times_s=tuple(step_times),
        true_step_length_m=cfg.step_length_m,
        true_step_width_m=cfg.step_width_m,
        true_step_time_s=1.0 / cfg.cadence_steps_per_s,
        imu_events=imu_events,
        imu_step_times_s=_merged_imu_step_times(imu_events, cfg.imu_fps),
    )
    return SynthResult(trial=trial, imu=imu, truth=truth, config=cfg)


# ---------------------------------------------------------------------------
# Cohorts

@dataclass(frozen=True)
class CohortConfig:
    n_participants: int = 30
    trials_per_participant: int = 3
    seed: int = 0
    fps: float = 30.0
    imu_fps: float = 60.0
    noise_sd_m: float = 0.002

    def __post_init__(self):
        if self.n_participants < 1:
            raise ConfigError("n_participants must be >= 1")
        if self.trials_per_participant < 1:
            raise ConfigError("trials_per_participant must be >= 1")
        if self.noise_sd_m < 0:
            raise ConfigError("noise_sd_m must be >= 0")


@dataclass(frozen=True)
class CohortResult:
    trials: tuple[SynthResult, ...]
    covariates: tuple[FallRiskCovariates, ...]


def generate_cohort(cfg: CohortConfig) -> CohortResult:
    """Simulate a cohort whose gait slows and whose fall-risk scores worsen
    with a latent frailty factor, three TUG trials per participant."""
    root = np.random.SeedSequence(cfg.seed)
    trials: list[SynthResult] = []
    covs: list[FallRiskCovariates] = []
    for i, ss in enumerate(root.spawn(cfg.n_participants)):
        rng = np.random.default_rng(ss)
        pid = f"P{i + 1:03d}"
        frailty = rng.uniform(0.0, 1.0)
        age = float(round(66 + 6 * rng.uniform(0, 1) + 14 * frailty))
        steadi = float(int(np.clip(round(1 + 9 * frailty + rng.normal(0, 1.0)), 0, 12)))
        fes = float(int(np.clip(round(7 + 13 * frailty + rng.normal(0, 1.5)), 7, 28)))
        btracks = float(np.clip(round(12 + 30 * frailty + rng.normal(0, 3.0), 1), 5.0, 60.0))
        covs.append(FallRiskCovariates(participant_id=pid, age=age, steadi=steadi,
                                       short_fes_i=fes, btracks=btracks))
        for k in range(cfg.trials_per_participant):
            sts1 = float(np.clip(0.9 + 0.9 * frailty + rng.normal(0, 0.04), 0.8, 2.0))
            trial_cfg = SynthConfig(
                fps=cfg.fps, imu_fps=cfg.imu_fps,
                participant_id=pid, trial_index=k + 1,
                step_length_m=float(np.clip(0.58 - 0.16 * frailty + rng.normal(0, 0.01), 0.38, 0.66)),
                step_width_m=float(np.clip(0.09 + 0.04 * frailty + rng.normal(0, 0.004), 0.06, 0.16)),
                cadence_steps_per_s=float(np.clip(1.78 - 0.38 * frailty + rng.normal(0, 0.03), 1.1, 1.95)),
                sts1_duration_s=sts1,
                sts2_duration_s=1.1 * sts1,
                turn_duration_s=float(np.clip(1.4 + 0.7 * frailty + rng.normal(0, 0.05), 1.0, 2.4)),
                walkway_length_m=3.0,
                noise_sd_m=cfg.noise_sd_m,
                seed=int(ss.generate_state(2)[1] >> 1) + k,
            )
            trials.append(generate(trial_cfg))
    return CohortResult(trials=tuple(trials), covariates=tuple(covs))
