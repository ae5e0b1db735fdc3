"""Readers and writers for the three on-disk formats.

All three are UTF-8 text with versioned headers. Parsers are strict: every
rejected line is reported with its location, and nothing is silently dropped.
Parse-from-string variants exist for callers that already hold file content
(the service layer passes payload text straight through).

Trajectory v1: '#'-prefixed header (version tag, participant_id, trial_index,
fps, coordinates), then one record per line of frame_index plus 72 floats
(24 joints x XYZ, meters), comma- or tab-separated.

IMU v1: '#'-prefixed header (version tag, participant_id, trial_index, fps,
accel_units, gyro_units), a column-name row, then CSV rows of
sample_index, side, accel_xyz, gyro_xyz.

Covariates v1: version tag, column-name row, then CSV rows of
participant_id, age, steadi, short_fes_i, btracks; empty cells are missing.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .domain import (FallRiskCovariates, ImuRecording, ImuSideStream, N_JOINTS,
                     TrialRecording)
from .errors import DataError, ParseError, StructuralError

TRAJECTORY_TAG = "gaitug-trajectory-v1"
IMU_TAG = "gaitug-imu-v1"
COVARIATES_TAG = "gaitug-covariates-v1"

IMU_COLUMNS = ("sample_index", "side", "accel_x", "accel_y", "accel_z",
               "gyro_x", "gyro_y", "gyro_z")
COVARIATE_COLUMNS = ("participant_id", "age", "steadi", "short_fes_i", "btracks")

_COORD_TAG = "world-y-up-meters"


def _fmt(v: float) -> str:
    # 12 significant digits keeps write->read round trips within 1e-9 relative.
    return "%.12g" % v


def _split(line: str) -> list[str]:
    sep = "\t" if "\t" in line else ","
    return [f.strip() for f in line.split(sep)]


def _float(tok: str, src: str, lineno: int, what: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"cannot parse {what} from {tok!r}", path=src, line=lineno) from None
    if not math.isfinite(v):
        raise DataError(f"{src}:{lineno}: non-finite {what}: {tok}")
    return v


def _int(tok: str, src: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"cannot parse {what} from {tok!r}", path=src, line=lineno) from None


class _HeaderScanner:
    """Pulls the leading '#' header block off a text body and forbids comment
    lines from reappearing after data starts."""

    def __init__(self, text: str, src: str, tag: str):
        self.src = src
        self.meta: dict[str, str] = {}
        self.data: list[tuple[int, str]] = []
        lines = text.splitlines()
        in_header = True
        saw_tag = False
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if not in_header:
                    raise StructuralError("header line after data", path=src, line=lineno)
                body = line.lstrip("#").strip()
                if not saw_tag:
                    if body != tag:
                        raise ParseError(f"expected version tag {tag!r}, got {body!r}",
                                         path=src, line=lineno)
                    saw_tag = True
                    continue
                if ":" in body:
                    key, _, value = body.partition(":")
                    self.meta[key.strip()] = value.strip()
                continue
            if not saw_tag:
                raise ParseError(f"missing version tag {tag!r}", path=src, line=lineno)
            in_header = False
            self.data.append((lineno, line))
        if not saw_tag:
            raise ParseError(f"missing version tag {tag!r}", path=src, line=1)

    def require(self, key: str) -> str:
        if key not in self.meta:
            raise StructuralError(f"header missing {key!r}", path=self.src)
        return self.meta[key]


def _header_common(scan: _HeaderScanner) -> tuple[str, int, float]:
    pid = scan.require("participant_id")
    trial = _int(scan.require("trial_index"), scan.src, 0, "trial_index")
    fps = _float(scan.require("fps"), scan.src, 0, "fps")
    return pid, trial, fps


# ---------------------------------------------------------------------------
# Trajectory

def parse_trajectory(text: str, source: str = "<string>") -> TrialRecording:
    scan = _HeaderScanner(text, source, TRAJECTORY_TAG)
    pid, trial, fps = _header_common(scan)
    scan.require("coordinates")
    if not scan.data:
        raise StructuralError("no data lines", path=source)
    n_fields = 1 + N_JOINTS * 3
    indices: list[int] = []
    rows: list[np.ndarray] = []
    for lineno, line in scan.data:
        fields = _split(line)
        if len(fields) != n_fields:
            raise ParseError(f"expected {n_fields} fields, got {len(fields)}",
                             path=source, line=lineno)
        idx = _int(fields[0], source, lineno, "frame_index")
        if idx < 0:
            raise StructuralError(f"negative frame_index {idx}", path=source, line=lineno)
        if indices and idx != indices[-1] + 1:
            raise StructuralError(
                f"frame_index {idx} does not follow {indices[-1]}", path=source, line=lineno)
        coords = np.array([_float(t, source, lineno, "coordinate") for t in fields[1:]])
        indices.append(idx)
        rows.append(coords.reshape(N_JOINTS, 3))
    return TrialRecording(participant_id=pid, trial_index=trial, fps=fps,
                          positions=np.stack(rows), first_frame_index=indices[0])


def load_trajectory(path: str | Path) -> TrialRecording:
    p = Path(path)
    return parse_trajectory(p.read_text(encoding="utf-8"), source=str(p))


def render_trajectory(rec: TrialRecording) -> str:
    out = [f"# {TRAJECTORY_TAG}",
           f"# participant_id: {rec.participant_id}",
           f"# trial_index: {rec.trial_index}",
           f"# fps: {_fmt(rec.fps)}",
           f"# coordinates: {_COORD_TAG}"]
    flat = rec.positions.reshape(rec.n_frames, -1)
    for k in range(rec.n_frames):
        out.append(str(rec.first_frame_index + k) + ","
                   + ",".join(_fmt(v) for v in flat[k]))
    return "\n".join(out) + "\n"


def save_trajectory(rec: TrialRecording, path: str | Path) -> None:
    Path(path).write_text(render_trajectory(rec), encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# IMU

def parse_imu(text: str, source: str = "<string>") -> ImuRecording:
    scan = _HeaderScanner(text, source, IMU_TAG)
    pid, trial, fps = _header_common(scan)
    accel_units = scan.require("accel_units")
    gyro_units = scan.require("gyro_units")
    if not scan.data:
        raise StructuralError("no data lines", path=source)
    col_lineno, col_line = scan.data[0]
    if tuple(_split(col_line)) != IMU_COLUMNS:
        raise ParseError(f"expected column row {','.join(IMU_COLUMNS)!r}",
                         path=source, line=col_lineno)
    sides: dict[str, dict[int, np.ndarray]] = {"left": {}, "right": {}}
    for lineno, line in scan.data[1:]:
        fields = _split(line)
        if len(fields) != len(IMU_COLUMNS):
            raise ParseError(f"expected {len(IMU_COLUMNS)} fields, got {len(fields)}",
                             path=source, line=lineno)
        idx = _int(fields[0], source, lineno, "sample_index")
        if idx < 0:
            raise StructuralError(f"negative sample_index {idx}", path=source, line=lineno)
        side = fields[1].lower()
        if side not in sides:
            raise ParseError(f"side must be 'left' or 'right', got {fields[1]!r}",
                             path=source, line=lineno)
        if idx in sides[side]:
            raise StructuralError(f"duplicate sample_index {idx} for side {side}",
                                  path=source, line=lineno)
        vals = np.array([_float(t, source, lineno, "channel value") for t in fields[2:]])
        sides[side][idx] = vals
    streams = {}
    for side, rows in sides.items():
        if not rows:
            raise StructuralError(f"missing side {side!r}", path=source)
        n = len(rows)
        if sorted(rows) != list(range(n)):
            raise StructuralError(f"side {side!r}: sample indices not contiguous from 0",
                                  path=source)
        table = np.stack([rows[i] for i in range(n)])
        streams[side] = ImuSideStream(accel=table[:, :3], gyro=table[:, 3:])
    if streams["left"].n_samples != streams["right"].n_samples:
        raise StructuralError(
            f"side sample counts differ: left={streams['left'].n_samples} "
            f"right={streams['right'].n_samples}", path=source)
    return ImuRecording(participant_id=pid, trial_index=trial, fps=fps,
                        left=streams["left"], right=streams["right"],
                        accel_units=accel_units, gyro_units=gyro_units)


def load_imu(path: str | Path) -> ImuRecording:
    p = Path(path)
    return parse_imu(p.read_text(encoding="utf-8"), source=str(p))


def render_imu(rec: ImuRecording) -> str:
    out = [f"# {IMU_TAG}",
           f"# participant_id: {rec.participant_id}",
           f"# trial_index: {rec.trial_index}",
           f"# fps: {_fmt(rec.fps)}",
           f"# accel_units: {rec.accel_units}",
           f"# gyro_units: {rec.gyro_units}",
           ",".join(IMU_COLUMNS)]
    for side in ("left", "right"):
        stream: ImuSideStream = getattr(rec, side)
        for i in range(stream.n_samples):
            vals = np.concatenate([stream.accel[i], stream.gyro[i]])
            out.append(f"{i},{side}," + ",".join(_fmt(v) for v in vals))
    return "\n".join(out) + "\n"


def save_imu(rec: ImuRecording, path: str | Path) -> None:
    Path(path).write_text(render_imu(rec), encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# Covariates

def parse_covariates(text: str, source: str = "<string>") -> list[FallRiskCovariates]:
    scan = _HeaderScanner(text, source, COVARIATES_TAG)
    if not scan.data:
        raise StructuralError("no data lines", path=source)
    col_lineno, col_line = scan.data[0]
    if tuple(_split(col_line)) != COVARIATE_COLUMNS:
        raise ParseError(f"expected column row {','.join(COVARIATE_COLUMNS)!r}",
                         path=source, line=col_lineno)
    records: list[FallRiskCovariates] = []
    seen: set[str] = set()
    for lineno, line in scan.data[1:]:
        fields = _split(line)
        if len(fields) != len(COVARIATE_COLUMNS):
            raise ParseError(f"expected {len(COVARIATE_COLUMNS)} fields, got {len(fields)}",
                             path=source, line=lineno)
        pid = fields[0]
        if not pid:
            raise ParseError("empty participant_id", path=source, line=lineno)
        if pid in seen:
            raise StructuralError(f"duplicate participant_id {pid!r}", path=source, line=lineno)
        seen.add(pid)
        vals = [None if t == "" else _float(t, source, lineno, name)
                for t, name in zip(fields[1:], COVARIATE_COLUMNS[1:])]
        try:
            records.append(FallRiskCovariates(pid, *vals))
        except DataError as e:
            raise DataError(f"{source}:{lineno}: {e}") from None
    return records


def load_covariates(path: str | Path) -> list[FallRiskCovariates]:
    p = Path(path)
    return parse_covariates(p.read_text(encoding="utf-8"), source=str(p))


def render_covariates(records: list[FallRiskCovariates]) -> str:
    out = [f"# {COVARIATES_TAG}", ",".join(COVARIATE_COLUMNS)]
    for r in records:
        cells = [r.participant_id] + ["" if v is None else _fmt(v)
                                      for v in (r.age, r.steadi, r.short_fes_i, r.btracks)]
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def save_covariates(records: list[FallRiskCovariates], path: str | Path) -> None:
    Path(path).write_text(render_covariates(records), encoding="utf-8", newline="\n")
