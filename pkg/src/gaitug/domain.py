"""Core value types shared across the pipeline.

Recordings are validated once at construction and treated as immutable
afterwards (arrays are marked read-only), so they can be shared freely
across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, StructuralError, UsageError

N_JOINTS = 24

# Joint identifiers follow the common 24-joint body convention used by the
# capture pipeline (pelvis-rooted kinematic tree).
DEFAULT_JOINT_INDICES = {
    "left_hip": 1,
    "right_hip": 2,
    "left_ankle": 7,
    "right_ankle": 8,
    "left_shoulder": 16,
    "right_shoulder": 17,
}

JOINT_NAMES = tuple(DEFAULT_JOINT_INDICES)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class JointIndexTable:
    """Maps the six named landmark joints onto columns of the 24-joint array."""

    left_hip: int = DEFAULT_JOINT_INDICES["left_hip"]
    right_hip: int = DEFAULT_JOINT_INDICES["right_hip"]
    left_ankle: int = DEFAULT_JOINT_INDICES["left_ankle"]
    right_ankle: int = DEFAULT_JOINT_INDICES["right_ankle"]
    left_shoulder: int = DEFAULT_JOINT_INDICES["left_shoulder"]
    right_shoulder: int = DEFAULT_JOINT_INDICES["right_shoulder"]

    def __post_init__(self):
        idx = [getattr(self, n) for n in JOINT_NAMES]
        for name, i in zip(JOINT_NAMES, idx):
            if not isinstance(i, int) or isinstance(i, bool):
                raise ConfigError(f"joint index for {name} must be an integer, got {i!r}")
            if not 0 <= i < N_JOINTS:
                raise ConfigError(f"joint index for {name} out of range [0, {N_JOINTS}): {i}")
        if len(set(idx)) != len(idx):
            raise ConfigError("joint indices must be distinct")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "JointIndexTable":
        unknown = set(mapping) - set(JOINT_NAMES)
        if unknown:
            raise ConfigError(f"unknown joint names: {sorted(unknown)}")
        return cls(**mapping)

    def resolve(self, name: str) -> int:
        if name not in JOINT_NAMES:
            raise UsageError(f"unknown joint name {name!r}; expected one of {list(JOINT_NAMES)}")
        return getattr(self, name)


def resolve_joint(table: JointIndexTable, name: str) -> int:
    return table.resolve(name)


@dataclass(frozen=True)
class JointFrame:
    """One capture frame: 24 world-space joint positions in meters."""

    frame_index: int
    positions: np.ndarray  # (24, 3), read-only

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        if p.shape != (N_JOINTS, 3):
            raise StructuralError(f"frame {self.frame_index}: expected (24, 3) positions, got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise DataError(f"frame {self.frame_index}: non-finite joint position")
        if self.frame_index < 0:
            raise StructuralError(f"negative frame index {self.frame_index}")
        object.__setattr__(self, "positions", _readonly(p))


@dataclass(frozen=True)
class TrialRecording:
    """A full TUG trial: stacked joint positions sampled at a fixed rate.

    Parameters
    ----------
    participant_id : str
        Non-empty identifier, no whitespace.
    trial_index : int
        1-based trial number within the participant's session.
    fps : float
        Capture rate in frames per second, > 0.
    positions : ndarray, shape (T, 24, 3)
        World-space joint positions in meters; frames are contiguous.
    first_frame_index : int
        Frame index of ``positions[0]`` in the source file.
    """

    participant_id: str
    trial_index: int
    fps: float
    positions: np.ndarray
    first_frame_index: int = 0

    def __post_init__(self):
        if not self.participant_id or any(c.isspace() for c in self.participant_id):
            raise StructuralError(f"invalid participant_id {self.participant_id!r}")
        if self.trial_index < 1:
            raise StructuralError(f"trial_index must be >= 1, got {self.trial_index}")
        if not (self.fps > 0 and np.isfinite(self.fps)):
            raise DataError(f"fps must be positive and finite, got {self.fps}")
        p = np.asarray(self.positions, dtype=float)
        if p.ndim != 3 or p.shape[1:] != (N_JOINTS, 3):
            raise StructuralError(f"expected positions of shape (T, 24, 3), got {p.shape}")
        if p.shape[0] == 0:
            raise StructuralError("recording has no frames")
        if not np.all(np.isfinite(p)):
            bad = int(np.argwhere(~np.isfinite(p).all(axis=(1, 2)))[0, 0])
            raise DataError(f"non-finite joint position at frame {self.first_frame_index + bad}")
        if self.first_frame_index < 0:
            raise StructuralError(f"negative first frame index {self.first_frame_index}")
        object.__setattr__(self, "positions", _readonly(p))

    @classmethod
    def from_frames(cls, participant_id: str, trial_index: int, fps: float,
                    frames: list[JointFrame]) -> "TrialRecording":
        if not frames:
            raise StructuralError("recording has no frames")
        idx = [f.frame_index for f in frames]
        for k in range(1, len(idx)):
            if idx[k] != idx[k - 1] + 1:
                raise StructuralError(
                    f"frame indices must increase by 1: {idx[k - 1]} followed by {idx[k]}")
        pos = np.stack([f.positions for f in frames])
        return cls(participant_id, trial_index, fps, pos, first_frame_index=idx[0])

    @property
    def n_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.fps

    def joint(self, table: JointIndexTable, name: str) -> np.ndarray:
        """(T, 3) trajectory of one named joint."""
        return self.positions[:, table.resolve(name), :]


@dataclass(frozen=True)
class ImuSideStream:
    """One insole's worth of samples: tri-axial accelerometer and gyroscope."""

    accel: np.ndarray  # (n, 3) m/s^2
    gyro: np.ndarray   # (n, 3) deg/s

    def __post_init__(self):
        a = np.asarray(self.accel, dtype=float)
        g = np.asarray(self.gyro, dtype=float)
        if a.ndim != 2 or a.shape[1] != 3 or g.shape != a.shape:
            raise StructuralError(f"accel/gyro must both be (n, 3), got {a.shape} and {g.shape}")
        if a.shape[0] == 0:
            raise StructuralError("IMU side stream has no samples")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(g))):
            raise DataError("non-finite IMU sample")
        object.__setattr__(self, "accel", _readonly(a))
        object.__setattr__(self, "gyro", _readonly(g))

    @property
    def n_samples(self) -> int:
        return self.accel.shape[0]


@dataclass(frozen=True)
class ImuRecording:
    """Paired left/right insole streams for one trial."""

    participant_id: str
    trial_index: int
    fps: float
    left: ImuSideStream
    right: ImuSideStream
    accel_units: str = "m/s^2"
    gyro_units: str = "deg/s"

    def __post_init__(self):
        if not self.participant_id or any(c.isspace() for c in self.participant_id):
            raise StructuralError(f"invalid participant_id {self.participant_id!r}")
        if self.trial_index < 1:
            raise StructuralError(f"trial_index must be >= 1, got {self.trial_index}")
        if not (self.fps > 0 and np.isfinite(self.fps)):
            raise DataError(f"fps must be positive and finite, got {self.fps}")


FES_I_RANGE = (7, 28)


@dataclass(frozen=True)
class FallRiskCovariates:
    """Per-participant fall-risk scores; None marks a missing value."""

    participant_id: str
    age: float | None = None
    steadi: float | None = None
    short_fes_i: float | None = None
    btracks: float | None = None

    def __post_init__(self):
        if not self.participant_id or any(c.isspace() for c in self.participant_id):
            raise StructuralError(f"invalid participant_id {self.participant_id!r}")
        for name in ("age", "steadi", "short_fes_i", "btracks"):
            v = getattr(self, name)
            if v is None:
                continue
            if not np.isfinite(v):
                raise DataError(f"{self.participant_id}: non-finite {name}")
            if name != "age" and v < 0:
                raise DataError(f"{self.participant_id}: negative {name} score {v}")
        if self.short_fes_i is not None and not (
                FES_I_RANGE[0] <= self.short_fes_i <= FES_I_RANGE[1]):
            raise DataError(
                f"{self.participant_id}: short FES-I must lie in "
                f"[{FES_I_RANGE[0]}, {FES_I_RANGE[1]}], got {self.short_fes_i}")

    def as_dict(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "age": self.age,
            "steadi": self.steadi,
            "short_fes_i": self.short_fes_i,
            "btracks": self.btracks,
        }
