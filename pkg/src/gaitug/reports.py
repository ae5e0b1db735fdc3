"""Deterministic report rendering: metrics CSV, segmentation and agreement
JSON, mixed-model tables, SVG scatterplots.

Every number in report output is formatted to 9 significant digits through a
single code path, so re-running a command over identical inputs produces
byte-identical files on any platform. Raw data files (trajectories, insole
streams) carry 12 digits instead; see io_ingest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParseError, UsageError
from .gait_metrics import GaitMetrics
from .lme import LmeFit
from .segmentation import SubtaskSegmentation
from .stats import AgreementResult

SEG_EVENTS = ("sts1", "turn1", "turn2", "sts2")

# Per-trial CSV schema. Lengths in cm/mm in report units (magnitudes inferred
# from the source estimates, flagged in the header); meters in SI units.
METRIC_COLUMNS_REPORT = (
    "participant_id", "trial_index", "n_steps", "st_mean", "st_sd",
    "sl_mean_cm", "sl_sd_mm", "sw_mean_cm", "sw_sd_mm", "si_sl", "si_sw",
    "sts1_s", "sts2_s", "turn1_s", "turn2_s")
METRIC_COLUMNS_SI = (
    "participant_id", "trial_index", "n_steps", "st_mean", "st_sd",
    "sl_mean_m", "sl_sd_m", "sw_mean_m", "sw_sd_m", "si_sl", "si_sw",
    "sts1_s", "sts2_s", "turn1_s", "turn2_s")
UNIT_MODES = ("report", "si")


def fmt9(x) -> str:
    """Canonical 9-significant-digit rendering; empty string for missing."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if not math.isfinite(v):
        raise DataError(f"non-finite value in report output: {v}")
    return "%.9g" % v


def json_dumps(obj, indent: int = 2) -> str:
    """JSON with floats rendered via fmt9. Key order is preserved as built,
    which the callers keep deterministic."""
    pieces: list[str] = []
    _emit_json(obj, pieces, 0, indent)
    pieces.append("\n")
    return "".join(pieces)


def _emit_json(obj, out: list[str], depth: int, indent: int):
    pad = " " * (indent * (depth + 1))
    end_pad = " " * (indent * depth)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, str):
        out.append(_json_string(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise DataError(f"non-finite value in JSON output: {v}")
        out.append("%.9g" % v)
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad + _json_string(str(k)) + ": ")
            _emit_json(v, out, depth + 1, indent)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end_pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit_json(v, out, depth + 1, indent)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end_pad + "]")
    else:
        raise DataError(f"cannot serialize {type(obj).__name__} to JSON")


_JSON_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _json_string(s: str) -> str:
    parts = ['"']
    for ch in s:
        if ch in _JSON_ESCAPES:
            parts.append(_JSON_ESCAPES[ch])
        elif ord(ch) < 0x20:
            parts.append("\\u%04x" % ord(ch))
        else:
            parts.append(ch)
    parts.append('"')
    return "".join(parts)


# ---------------------------------------------------------------------------
# Per-trial metrics

@dataclass(frozen=True)
class TrialMetricsRow:
    """One analyzed trial in SI units (seconds, meters, percent)."""
    participant_id: str
    trial_index: int
    n_steps: int
    st_mean: float | None
    st_sd: float | None
    sl_mean: float | None
    sl_sd: float | None
    sw_mean: float | None
    sw_sd: float | None
    si_sl: float | None
    si_sw: float | None
    sts1_s: float
    sts2_s: float
    turn1_s: float
    turn2_s: float

    @classmethod
    def from_analysis(cls, participant_id: str, trial_index: int,
                      metrics: GaitMetrics, seg: SubtaskSegmentation) -> "TrialMetricsRow":
        d = seg.durations
        return cls(participant_id=participant_id, trial_index=trial_index,
                   n_steps=metrics.n_steps,
                   st_mean=metrics.st_mean, st_sd=metrics.st_sd,
                   sl_mean=metrics.sl_mean, sl_sd=metrics.sl_sd,
                   sw_mean=metrics.sw_mean, sw_sd=metrics.sw_sd,
                   si_sl=metrics.si_sl, si_sw=metrics.si_sw,
                   sts1_s=d["sts1"], sts2_s=d["sts2"],
                   turn1_s=d["turn1"], turn2_s=d["turn2"])

    def values(self, units: str) -> list:
        if units not in UNIT_MODES:
            raise UsageError(f"units must be one of {UNIT_MODES}, got {units!r}")
        def scale(v, factor):
            return None if v is None else v * factor
        if units == "report":
            sl_mean, sl_sd = scale(self.sl_mean, 100.0), scale(self.sl_sd, 1000.0)
            sw_mean, sw_sd = scale(self.sw_mean, 100.0), scale(self.sw_sd, 1000.0)
        else:
            sl_mean, sl_sd = self.sl_mean, self.sl_sd
            sw_mean, sw_sd = self.sw_mean, self.sw_sd
        return [self.participant_id, self.trial_index, self.n_steps,
                self.st_mean, self.st_sd, sl_mean, sl_sd, sw_mean, sw_sd,
                self.si_sl, self.si_sw,
                self.sts1_s, self.sts2_s, self.turn1_s, self.turn2_s]


def render_metrics_csv(rows: list[TrialMetricsRow], units: str = "report") -> str:
    cols = METRIC_COLUMNS_REPORT if units == "report" else METRIC_COLUMNS_SI
    lines = ["# gaitug-metrics-v1",
             f"# units: {units}" + (" (cm/mm scales inferred from source estimate"
                                    " magnitudes)" if units == "report" else ""),
             ",".join(cols)]
    for row in rows:
        vals = row.values(units)
        lines.append(",".join(v if isinstance(v, str) else fmt9(v) for v in vals))
    return "\n".join(lines) + "\n"


def parse_metrics_csv(text: str, path: str = "<metrics>") -> list[dict]:
    """Rows as dicts: participant_id str, everything else float or None."""
    rows: list[dict] = []
    header: list[str] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if header is None:
            header = parts
            if "participant_id" not in header:
                raise ParseError("metrics CSV lacks a participant_id column",
                                 path=path, line=lineno)
            continue
        if len(parts) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(parts)}",
                             path=path, line=lineno)
        row: dict = {}
        for key, val in zip(header, parts):
            if key == "participant_id":
                row[key] = val
            elif val == "":
                row[key] = None
            else:
                try:
                    row[key] = float(val)
                except ValueError as exc:
                    raise ParseError(f"bad numeric value {val!r} for {key}",
                                     path=path, line=lineno) from exc
        rows.append(row)
    if header is None:
        raise ParseError("metrics CSV is empty", path=path, line=0)
    return rows


# ---------------------------------------------------------------------------
# Segmentation report

def segmentation_dict(participant_id: str, trial_index: int,
                      seg: SubtaskSegmentation) -> dict:
    events = []
    for name in SEG_EVENTS:
        p = seg.event(name)
        events.append({
            "name": name,
            "start_frame": int(p.start_frame),
            "peak_frame": int(p.peak_frame),
            "end_frame": int(p.end_frame),
            "duration_frames": int(p.duration_frames),
            "duration_s": p.duration_frames / seg.fps,
        })
    return {"participant_id": participant_id, "trial_index": trial_index,
            "fps": seg.fps, "events": events}


def render_segmentation_json(participant_id: str, trial_index: int,
                             seg: SubtaskSegmentation) -> str:
    return json_dumps(segmentation_dict(participant_id, trial_index, seg))


# ---------------------------------------------------------------------------
# Agreement report

def agreement_dict(result: AgreementResult) -> dict:
    rho = result.spearman
    normality = None
    if result.diff_normality is not None:
        normality = {"w_statistic": result.diff_normality.w_statistic,
                     "p_value": result.diff_normality.p_value,
                     "n": result.diff_normality.n}
    return {
        "spearman_rho": rho.rho,
        "spearman_p": rho.p_value,
        "n_pairs": result.n_pairs,
        "n_participants": result.n_participants,
        "bias_s": result.bias_s,
        "diff_normality": normality,
        "excluded_participants": [
            {"participant_id": pid, "reason": reason}
            for pid, reason in result.excluded],
        "pairs": [
            {"participant_id": p.participant_id, "trial_index": p.trial_index,
             "video_mean_st_s": p.video_mean_st_s,
             "insole_mean_st_s": p.insole_mean_st_s,
             "difference_s": p.video_mean_st_s - p.insole_mean_st_s}
            for p in result.pairs],
    }


def render_agreement_json(result: AgreementResult) -> str:
    return json_dumps(agreement_dict(result))


# ---------------------------------------------------------------------------
# Mixed-model report

def lme_dict(fit: LmeFit) -> dict:
    return {
        "effects": [
            {"name": e.name, "estimate": e.estimate, "se": e.se,
             "ci_low": e.ci_low, "ci_high": e.ci_high,
             "z": e.z, "p_value": e.p_value}
            for e in fit.effects],
        "sigma2": fit.sigma2,
        "tau00": fit.tau00,
        "icc": fit.icc,
        "n_obs": fit.n_obs,
        "n_groups": fit.n_groups,
        "r2_marginal": fit.r2_marginal,
        "r2_conditional": fit.r2_conditional,
        "convergence": fit.convergence,
        "inference": fit.inference,
        "reml_criterion": fit.reml_criterion,
    }


def render_lme_json(fit: LmeFit) -> str:
    return json_dumps(lme_dict(fit))


def _fmt6(x) -> str:
    return "" if x is None else "%.6g" % float(x)


def render_lme_table(fit: LmeFit, outcome: str, group: str = "participant_id") -> str:
    """Fixed-effect estimates with Wald CIs and p-values, then variance
    components, in the conventional mixed-model summary layout. Values are
    shown to 6 significant digits; the JSON rendering keeps full precision."""
    body = [(e.name, _fmt6(e.estimate),
             f"{_fmt6(e.ci_low)} .. {_fmt6(e.ci_high)}", _fmt6(e.p_value))
            for e in fit.effects]
    cols = ("Predictors", "Estimates", "CI", "p")
    widths = [max(len(cols[i]), *(len(r[i]) for r in body)) for i in range(4)]

    def grid(row):
        return (f"{row[0]:<{widths[0]}}  {row[1]:>{widths[1]}}  "
                f"{row[2]:>{widths[2]}}  {row[3]:>{widths[3]}}")

    tail = [
        ("Random Effects", None),
        ("sigma^2", _fmt6(fit.sigma2)),
        (f"tau00 {group}", _fmt6(fit.tau00)),
        ("ICC", _fmt6(fit.icc)),
        (f"N {group}", str(fit.n_groups)),
        ("", None),
        ("Observations", str(fit.n_obs)),
        ("Marginal R2 / Conditional R2",
         f"{_fmt6(fit.r2_marginal)} / {_fmt6(fit.r2_conditional)}"),
        ("Convergence", fit.convergence),
    ]
    label_w = max(len(label) for label, _ in tail)

    rows = [f"Outcome: {outcome}", "", grid(cols)]
    rows.append("-" * len(grid(cols)))
    rows.extend(grid(r) for r in body)
    rows.append("")
    for label, value in tail:
        rows.append(label if value is None else f"{label:<{label_w}}  {value}")
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# Scatterplots

SVG_W, SVG_H = 640, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 20, 40, 52


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    raw = (hi - lo) / (n - 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def render_scatter_svg(x: list[float], y: list[float], xlabel: str, ylabel: str,
                       title: str, trend: tuple[float, float] | None = None) -> str:
    """640x480 scatterplot; trend = (intercept, slope) draws the marginal
    line across the x range. Pass trend=None to suppress it."""
    if len(x) != len(y) or not x:
        raise DataError("scatterplot needs matching non-empty x and y")
    xlo, xhi = min(x), max(x)
    ylo, yhi = min(y), max(y)
    if xhi == xlo:
        xlo, xhi = xlo - 1.0, xhi + 1.0
    if yhi == ylo:
        ylo, yhi = ylo - 1.0, yhi + 1.0
    xpad, ypad = 0.05 * (xhi - xlo), 0.05 * (yhi - ylo)
    xlo, xhi = xlo - xpad, xhi + xpad
    ylo, yhi = ylo - ypad, yhi + ypad
    plot_w = SVG_W - _MARGIN_L - _MARGIN_R
    plot_h = SVG_H - _MARGIN_T - _MARGIN_B

    def px(v):
        return _MARGIN_L + (v - xlo) / (xhi - xlo) * plot_w

    def py(v):
        return _MARGIN_T + (yhi - v) / (yhi - ylo) * plot_h

    def f(v):
        return "%.2f" % v

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" '
        f'viewBox="0 0 {SVG_W} {SVG_H}">',
        f'<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>',
        f'<text x="{SVG_W / 2:.0f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{_xml_escape(title)}</text>',
    ]
    axis = (f'M {f(px(xlo))} {f(py(ylo))} L {f(px(xhi))} {f(py(ylo))} '
            f'M {f(px(xlo))} {f(py(ylo))} L {f(px(xlo))} {f(py(yhi))}')
    parts.append(f'<path d="{axis}" stroke="black" fill="none" stroke-width="1"/>')
    for t in _ticks(xlo + xpad, xhi - xpad):
        if not xlo <= t <= xhi:
            continue
        parts.append(f'<line x1="{f(px(t))}" y1="{f(py(ylo))}" x2="{f(px(t))}" '
                     f'y2="{f(py(ylo) + 5)}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{f(px(t))}" y="{f(py(ylo) + 18)}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{fmt9(round(t, 9))}</text>')
    for t in _ticks(ylo + ypad, yhi - ypad):
        if not ylo <= t <= yhi:
            continue
        parts.append(f'<line x1="{f(px(xlo) - 5)}" y1="{f(py(t))}" x2="{f(px(xlo))}" '
                     f'y2="{f(py(t))}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{f(px(xlo) - 8)}" y="{f(py(t) + 4)}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{fmt9(round(t, 9))}</text>')
    parts.append(f'<text x="{_MARGIN_L + plot_w / 2:.0f}" y="{SVG_H - 12}" '
                 f'text-anchor="middle" font-family="sans-serif" font-size="13">'
                 f'{_xml_escape(xlabel)}</text>')
    parts.append(f'<text x="16" y="{_MARGIN_T + plot_h / 2:.0f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 16 {_MARGIN_T + plot_h / 2:.0f})">'
                 f'{_xml_escape(ylabel)}</text>')
    if trend is not None:
        b0, b1 = trend
        x0, x1 = xlo + xpad, xhi - xpad
        parts.append(f'<line x1="{f(px(x0))}" y1="{f(py(b0 + b1 * x0))}" '
                     f'x2="{f(px(x1))}" y2="{f(py(b0 + b1 * x1))}" '
                     f'stroke="#1f6fb2" stroke-width="2"/>')
    for xi, yi in zip(x, y):
        parts.append(f'<circle cx="{f(px(xi))}" cy="{f(py(yi))}" r="3" '
                     f'fill="#d0622a" fill-opacity="0.75"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _xml_escape(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))
