"""Value-type validation: joint lookup, recordings, covariates."""

import numpy as np
import pytest

from gaitug import (
    ConfigError,
    DataError,
    FallRiskCovariates,
    ImuRecording,
    ImuSideStream,
    JointIndexTable,
    StructuralError,
    TrialRecording,
    UsageError,
)
from gaitug.domain import JointFrame, N_JOINTS


def test_default_joint_indices():
    table = JointIndexTable()
    assert table.resolve("left_hip") == 1
    assert table.resolve("right_hip") == 2
    assert table.resolve("left_ankle") == 7
    assert table.resolve("right_ankle") == 8
    assert table.resolve("left_shoulder") == 16
    assert table.resolve("right_shoulder") == 17


def test_joint_table_rejects_duplicates():
    with pytest.raises(ConfigError, match="distinct"):
        JointIndexTable(left_hip=3, right_hip=3)


def test_joint_table_rejects_out_of_range():
    with pytest.raises(ConfigError, match="out of range"):
        JointIndexTable(left_ankle=N_JOINTS)
    with pytest.raises(ConfigError, match="out of range"):
        JointIndexTable(left_ankle=-1)


def test_joint_table_rejects_non_integer():
    with pytest.raises(ConfigError, match="integer"):
        JointIndexTable(left_hip=1.5)
    with pytest.raises(ConfigError, match="integer"):
        JointIndexTable(left_hip=True)


def test_joint_table_from_mapping():
    table = JointIndexTable.from_mapping({"left_hip": 4, "right_hip": 5})
    assert table.resolve("left_hip") == 4
    assert table.resolve("left_ankle") == 7
    with pytest.raises(ConfigError, match="unknown joint names"):
        JointIndexTable.from_mapping({"pelvis": 0})


def test_resolve_unknown_name_is_usage_error():
    with pytest.raises(UsageError, match="unknown joint name"):
        JointIndexTable().resolve("left_knee")


def test_trial_recording_basics(rng):
    pos = rng.normal(size=(10, 24, 3))
    rec = TrialRecording("P01", 1, 30.0, pos, first_frame_index=5)
    assert rec.n_frames == 10
    assert rec.duration_s == pytest.approx(10 / 30.0)
    np.testing.assert_array_equal(rec.joint(JointIndexTable(), "left_ankle"),
                                  pos[:, 7, :])


def test_trial_recording_arrays_are_read_only(rng):
    rec = TrialRecording("P01", 1, 30.0, rng.normal(size=(4, 24, 3)))
    with pytest.raises(ValueError):
        rec.positions[0, 0, 0] = 1.0


def test_trial_recording_shape_validation(rng):
    with pytest.raises(StructuralError, match="shape"):
        TrialRecording("P01", 1, 30.0, rng.normal(size=(4, 23, 3)))
    with pytest.raises(StructuralError, match="no frames"):
        TrialRecording("P01", 1, 30.0, np.empty((0, 24, 3)))


def test_trial_recording_nan_names_offending_frame(rng):
    pos = rng.normal(size=(6, 24, 3))
    pos[4, 3, 1] = np.nan
    with pytest.raises(DataError, match="frame 14"):
        TrialRecording("P01", 1, 30.0, pos, first_frame_index=10)


def test_trial_recording_id_and_index_validation(rng):
    pos = rng.normal(size=(3, 24, 3))
    with pytest.raises(StructuralError):
        TrialRecording("", 1, 30.0, pos)
    with pytest.raises(StructuralError):
        TrialRecording("P 1", 1, 30.0, pos)
    with pytest.raises(StructuralError, match="trial_index"):
        TrialRecording("P01", 0, 30.0, pos)
    with pytest.raises(DataError, match="fps"):
        TrialRecording("P01", 1, 0.0, pos)
    with pytest.raises(StructuralError, match="first frame"):
        TrialRecording("P01", 1, 30.0, pos, first_frame_index=-1)


def test_from_frames_requires_contiguous_indices(rng):
    frames = [JointFrame(i, rng.normal(size=(24, 3))) for i in (3, 4, 6)]
    with pytest.raises(StructuralError, match="increase by 1"):
        TrialRecording.from_frames("P01", 1, 30.0, frames)
    rec = TrialRecording.from_frames("P01", 1, 30.0, frames[:2])
    assert rec.first_frame_index == 3
    assert rec.n_frames == 2


def test_joint_frame_validation(rng):
    with pytest.raises(StructuralError):
        JointFrame(0, rng.normal(size=(24, 2)))
    bad = rng.normal(size=(24, 3))
    bad[0, 0] = np.inf
    with pytest.raises(DataError, match="non-finite"):
        JointFrame(0, bad)
    with pytest.raises(StructuralError, match="negative"):
        JointFrame(-1, rng.normal(size=(24, 3)))


def test_imu_side_stream_validation(rng):
    with pytest.raises(StructuralError):
        ImuSideStream(rng.normal(size=(5, 3)), rng.normal(size=(4, 3)))
    with pytest.raises(StructuralError, match="no samples"):
        ImuSideStream(np.empty((0, 3)), np.empty((0, 3)))
    bad = rng.normal(size=(5, 3))
    bad[2, 1] = np.nan
    with pytest.raises(DataError, match="non-finite"):
        ImuSideStream(bad, rng.normal(size=(5, 3)))
    stream = ImuSideStream(rng.normal(size=(5, 3)), rng.normal(size=(5, 3)))
    assert stream.n_samples == 5
    with pytest.raises(ValueError):
        stream.accel[0, 0] = 0.0


def test_imu_recording_validation(rng):
    side = ImuSideStream(rng.normal(size=(5, 3)), rng.normal(size=(5, 3)))
    rec = ImuRecording("P01", 1, 60.0, side, side)
    assert rec.gyro_units == "deg/s"
    with pytest.raises(StructuralError):
        ImuRecording("", 1, 60.0, side, side)
    with pytest.raises(DataError, match="fps"):
        ImuRecording("P01", 1, float("nan"), side, side)


def test_covariates_score_bounds():
    ok = FallRiskCovariates("P01", age=70.0, steadi=1.0, short_fes_i=7.0, btracks=0.0)
    assert ok.short_fes_i == 7.0
    FallRiskCovariates("P01", short_fes_i=28.0)
    with pytest.raises(DataError, match="short FES-I"):
        FallRiskCovariates("P01", short_fes_i=6.9)
    with pytest.raises(DataError, match="short FES-I"):
        FallRiskCovariates("P01", short_fes_i=28.1)
    with pytest.raises(DataError, match="negative"):
        FallRiskCovariates("P01", btracks=-1.0)
    with pytest.raises(DataError, match="non-finite"):
        FallRiskCovariates("P01", steadi=float("inf"))


def test_covariates_as_dict_round_trip():
    rec = FallRiskCovariates("P07", age=82.0, steadi=3.0, short_fes_i=15.0, btracks=40.0)
    d = rec.as_dict()
    assert d["participant_id"] == "P07"
    assert FallRiskCovariates(**d) == rec
