"""Report rendering: number formatting, JSON emission, the metrics CSV
round trip, mixed-model tables, and SVG scatterplots.

Rendering is the determinism boundary, so most assertions here are exact
string or byte comparisons rather than numeric tolerances.
"""

import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from gaitug import DataError, LmeSpec, ParseError, StepTimePair, UsageError
from gaitug.lme import fit_lme
from gaitug.reports import (METRIC_COLUMNS_REPORT, METRIC_COLUMNS_SI,
                            TrialMetricsRow, _ticks, agreement_dict, fmt9,
                            json_dumps, lme_dict, parse_metrics_csv,
                            render_agreement_json, render_lme_json,
                            render_lme_table, render_metrics_csv,
                            render_scatter_svg, render_segmentation_json,
                            segmentation_dict)
from gaitug.stats import compare_video_insole

SVG_NS = "{http://www.w3.org/2000/svg}"


# ---------------------------------------------------------------------------
# Scalar formatting

def test_fmt9_scalars():
    assert fmt9(None) == ""
    assert fmt9(True) == "true"
    assert fmt9(False) == "false"
    assert fmt9(7) == "7"
    assert fmt9(np.int64(-3)) == "-3"
    assert fmt9(0.5) == "0.5"
    assert fmt9(1.0 / 3.0) == "0.333333333"
    assert fmt9(1e-12) == "1e-12"
    assert fmt9(np.float64(2.5)) == "2.5"


def test_fmt9_rejects_non_finite():
    with pytest.raises(DataError, match="non-finite"):
        fmt9(float("nan"))
    with pytest.raises(DataError, match="non-finite"):
        fmt9(float("inf"))


def test_fmt9_round_trips_nine_digit_values():
    for v in (0.0625, -12.25, 1234.5, 9.81, 0.001953125):
        assert float(fmt9(v)) == v


# ---------------------------------------------------------------------------
# JSON emission

def test_json_dumps_empty_containers_and_newline():
    assert json_dumps({}) == "{}\n"
    assert json_dumps([]) == "[]\n"
    assert json_dumps({"a": []}) == '{\n  "a": []\n}\n'


def test_json_dumps_preserves_insertion_order():
    text = json_dumps({"zebra": 1, "apple": 2, "mid": {"y": 0, "x": 1}})
    assert text.index('"zebra"') < text.index('"apple"') < text.index('"mid"')
    assert text.index('"y"') < text.index('"x"')


def test_json_dumps_is_valid_json():
    obj = {
        "name": "trial",
        "count": 3,
        "ok": True,
        "missing": None,
        "values": [0.5, -1.25, 2],
        "nested": {"deep": [{"a": 1}]},
    }
    assert json.loads(json_dumps(obj)) == obj


def test_json_dumps_escapes_strings():
    text = json_dumps({"k": 'quote " back \\ nl \n tab \t cr \r bell \x07'})
    assert '\\"' in text
    assert "\\\\" in text
    assert "\\n" in text
    assert "\\t" in text
    assert "\\r" in text
    assert "\\u0007" in text
    parsed = json.loads(text)
    assert parsed["k"] == 'quote " back \\ nl \n tab \t cr \r bell \x07'


def test_json_dumps_floats_use_nine_digits():
    assert '"x": 0.333333333' in json_dumps({"x": 1.0 / 3.0})
    assert '"x": 0.1' in json_dumps({"x": 0.1})


def test_json_dumps_rejects_bad_values():
    with pytest.raises(DataError, match="non-finite"):
        json_dumps({"x": float("nan")})
    with pytest.raises(DataError, match="cannot serialize"):
        json_dumps({"x": {1, 2}})
    with pytest.raises(DataError, match="cannot serialize"):
        json_dumps(object())


def test_json_dumps_numpy_scalars():
    text = json_dumps({"i": np.int32(4), "f": np.float64(0.25)})
    assert json.loads(text) == {"i": 4, "f": 0.25}


# ---------------------------------------------------------------------------
# Metrics CSV

def sample_row(**overrides):
    base = dict(participant_id="P001", trial_index=2, n_steps=9,
                st_mean=0.5625, st_sd=0.03125,
                sl_mean=0.5, sl_sd=0.015625, sw_mean=0.09375, sw_sd=0.0078125,
                si_sl=3.125, si_sw=6.25,
                sts1_s=1.25, sts2_s=1.5, turn1_s=1.0, turn2_s=1.125)
    base.update(overrides)
    return TrialMetricsRow(**base)


def test_row_values_report_units_scale_lengths():
    row = sample_row()
    vals = row.values("report")
    assert vals[:3] == ["P001", 2, 9]
    assert vals[3] == row.st_mean
    assert vals[5] == pytest.approx(row.sl_mean * 100.0)
    assert vals[6] == pytest.approx(row.sl_sd * 1000.0)
    assert vals[7] == pytest.approx(row.sw_mean * 100.0)
    assert vals[8] == pytest.approx(row.sw_sd * 1000.0)
    assert vals[9:11] == [row.si_sl, row.si_sw]
    assert vals[11:] == [1.25, 1.5, 1.0, 1.125]


def test_row_values_si_units_pass_through():
    row = sample_row()
    vals = row.values("si")
    assert vals[5:9] == [row.sl_mean, row.sl_sd, row.sw_mean, row.sw_sd]


def test_row_values_none_survives_scaling():
    row = sample_row(st_mean=None, st_sd=None, sl_mean=None, sl_sd=None,
                     sw_mean=None, sw_sd=None, si_sl=None, si_sw=None,
                     n_steps=0)
    vals = row.values("report")
    assert vals[3:11] == [None] * 8


def test_row_values_rejects_unknown_units():
    with pytest.raises(UsageError, match="units"):
        sample_row().values("metric")


def test_metrics_csv_headers():
    text = render_metrics_csv([sample_row()], units="report")
    lines = text.splitlines()
    assert lines[0] == "# gaitug-metrics-v1"
    assert lines[1] == ("# units: report (cm/mm scales inferred from source"
                        " estimate magnitudes)")
    assert lines[2] == ",".join(METRIC_COLUMNS_REPORT)
    assert text.endswith("\n")

    si = render_metrics_csv([sample_row()], units="si").splitlines()
    assert si[1] == "# units: si"
    assert si[2] == ",".join(METRIC_COLUMNS_SI)


def test_metrics_csv_round_trip_si():
    # All sample values are short binary fractions, so 9 significant digits
    # reproduce them exactly and the parse is an equality check.
    rows = [sample_row(), sample_row(participant_id="P002", trial_index=1,
                                     st_mean=None, st_sd=None)]
    parsed = parse_metrics_csv(render_metrics_csv(rows, units="si"))
    assert len(parsed) == 2
    for row, got in zip(rows, parsed):
        vals = row.values("si")
        assert got["participant_id"] == row.participant_id
        assert got["trial_index"] == float(row.trial_index)
        assert got["n_steps"] == float(row.n_steps)
        for key, val in zip(METRIC_COLUMNS_SI[3:], vals[3:]):
            assert got[key] == val, key


def test_metrics_csv_round_trip_report_units():
    parsed = parse_metrics_csv(render_metrics_csv([sample_row()], units="report"))
    assert parsed[0]["sl_mean_cm"] == 50.0
    assert parsed[0]["sl_sd_mm"] == 15.625
    assert parsed[0]["sw_mean_cm"] == 9.375
    assert parsed[0]["sw_sd_mm"] == 7.8125


def test_parse_metrics_csv_blank_and_comment_lines_skipped():
    text = "# note\n\nparticipant_id,st_mean\n\nP01,0.5\n# tail\n"
    parsed = parse_metrics_csv(text)
    assert parsed == [{"participant_id": "P01", "st_mean": 0.5}]


def test_parse_metrics_csv_empty_cell_is_none():
    parsed = parse_metrics_csv("participant_id,st_mean,st_sd\nP01,,0.25\n")
    assert parsed[0]["st_mean"] is None
    assert parsed[0]["st_sd"] == 0.25


def test_parse_metrics_csv_field_count_mismatch():
    text = "participant_id,a,b\nP01,1\n"
    with pytest.raises(ParseError, match="expected 3 fields, got 2") as exc:
        parse_metrics_csv(text, path="m.csv")
    assert exc.value.line == 2
    assert exc.value.path == "m.csv"


def test_parse_metrics_csv_bad_numeric():
    text = "# header\nparticipant_id,a\nP01,oops\n"
    with pytest.raises(ParseError, match="bad numeric value 'oops' for a") as exc:
        parse_metrics_csv(text)
    assert exc.value.line == 3


def test_parse_metrics_csv_requires_participant_column():
    with pytest.raises(ParseError, match="participant_id column") as exc:
        parse_metrics_csv("a,b\n1,2\n")
    assert exc.value.line == 1


def test_parse_metrics_csv_empty_text():
    with pytest.raises(ParseError, match="metrics CSV is empty") as exc:
        parse_metrics_csv("# only comments\n")
    assert exc.value.line == 0


# ---------------------------------------------------------------------------
# Segmentation report

def test_segmentation_dict_structure(default_seg):
    _, seg = default_seg
    d = segmentation_dict("P007", 3, seg)
    assert d["participant_id"] == "P007"
    assert d["trial_index"] == 3
    assert d["fps"] == seg.fps
    assert [e["name"] for e in d["events"]] == ["sts1", "turn1", "turn2", "sts2"]
    for event in d["events"]:
        peak = seg.event(event["name"])
        assert event["start_frame"] == peak.start_frame
        assert event["peak_frame"] == peak.peak_frame
        assert event["end_frame"] == peak.end_frame
        assert event["duration_frames"] == peak.duration_frames
        assert event["duration_s"] == peak.duration_frames / seg.fps
        assert all(isinstance(event[k], int) for k in
                   ("start_frame", "peak_frame", "end_frame", "duration_frames"))


def test_segmentation_json_round_trips(default_seg):
    _, seg = default_seg
    text = render_segmentation_json("P007", 3, seg)
    assert json.loads(text) == json.loads(
        json_dumps(segmentation_dict("P007", 3, seg)))


# ---------------------------------------------------------------------------
# Agreement report

def agreement_fixture():
    pairs = []
    offsets = iter([0.02, -0.01, 0.035, 0.015, 0.0, 0.04, -0.02, 0.01, 0.03])
    for pid in ("P01", "P02", "P03"):
        for trial in (1, 2, 3):
            insole = 0.55 + 0.01 * trial
            pairs.append(StepTimePair(participant_id=pid, trial_index=trial,
                                      video_mean_st_s=insole + next(offsets),
                                      insole_mean_st_s=insole))
    pairs.append(StepTimePair(participant_id="P04", trial_index=1,
                              video_mean_st_s=0.6, insole_mean_st_s=0.58))
    return compare_video_insole(pairs)


def test_agreement_dict_structure():
    result = agreement_fixture()
    d = agreement_dict(result)
    assert d["spearman_rho"] == result.spearman.rho
    assert d["spearman_p"] == result.spearman.p_value
    assert d["n_pairs"] == result.n_pairs == 9
    assert d["n_participants"] == result.n_participants == 3
    assert d["bias_s"] == result.bias_s
    norm = d["diff_normality"]
    assert norm is not None
    assert norm["n"] == 9
    assert norm["w_statistic"] == result.diff_normality.w_statistic
    assert norm["p_value"] == result.diff_normality.p_value
    assert d["excluded_participants"] == [
        {"participant_id": pid, "reason": reason}
        for pid, reason in result.excluded]
    assert {e["participant_id"] for e in d["excluded_participants"]} == {"P04"}
    assert len(d["pairs"]) == 9
    for entry, pair in zip(d["pairs"], result.pairs):
        assert entry["participant_id"] == pair.participant_id
        assert entry["trial_index"] == pair.trial_index
        assert entry["difference_s"] == (pair.video_mean_st_s
                                         - pair.insole_mean_st_s)


def test_agreement_json_is_valid():
    result = agreement_fixture()
    parsed = json.loads(render_agreement_json(result))
    assert set(parsed) == {"spearman_rho", "spearman_p", "n_pairs",
                           "n_participants", "bias_s", "diff_normality",
                           "excluded_participants", "pairs"}


# ---------------------------------------------------------------------------
# Mixed-model report

def lme_fixture():
    rng = np.random.default_rng(42)
    rows = []
    for g in range(8):
        u = rng.normal(0.0, 1.2)
        for t in range(4):
            x = rng.uniform(-1.0, 1.0)
            rows.append({"participant_id": f"G{g:02d}", "x": x,
                         "y": 1.0 + 0.8 * x + u + rng.normal(0.0, 0.5)})
    return fit_lme(LmeSpec(outcome="y", predictors=("x",)), rows)


def test_lme_dict_structure():
    fit = lme_fixture()
    d = lme_dict(fit)
    assert set(d) == {"effects", "sigma2", "tau00", "icc", "n_obs", "n_groups",
                      "r2_marginal", "r2_conditional", "convergence",
                      "inference", "reml_criterion"}
    assert [e["name"] for e in d["effects"]] == ["(Intercept)", "x"]
    for entry, effect in zip(d["effects"], fit.effects):
        assert entry["estimate"] == effect.estimate
        assert entry["se"] == effect.se
        assert entry["ci_low"] == effect.ci_low
        assert entry["ci_high"] == effect.ci_high
        assert entry["z"] == effect.z
        assert entry["p_value"] == effect.p_value
    assert d["sigma2"] == fit.sigma2
    assert d["tau00"] == fit.tau00
    assert d["n_obs"] == 32
    assert d["n_groups"] == 8
    assert json.loads(render_lme_json(fit))["convergence"] == fit.convergence


def test_lme_table_layout():
    fit = lme_fixture()
    text = render_lme_table(fit, outcome="y")
    lines = text.splitlines()
    assert lines[0] == "Outcome: y"
    assert lines[1] == ""
    header = lines[2]
    for col in ("Predictors", "Estimates", "CI", "p"):
        assert col in header
    assert set(lines[3]) == {"-"}
    assert len(lines[3]) == len(header)
    assert lines[4].startswith("(Intercept)")
    assert lines[5].startswith("x")
    assert " .. " in lines[4] and " .. " in lines[5]
    assert "Random Effects" in text
    assert "sigma^2" in text
    assert "tau00 participant_id" in text
    assert "ICC" in text
    assert "N participant_id" in text
    assert "Observations" in text
    assert "Marginal R2 / Conditional R2" in text
    assert "Convergence" in text
    assert text.endswith("\n")


def test_lme_table_values_match_fit():
    fit = lme_fixture()
    text = render_lme_table(fit, outcome="y", group="pid")
    assert "%.6g" % fit.sigma2 in text
    assert "tau00 pid" in text
    assert "N pid" in text
    assert str(fit.n_obs) in text
    assert fit.convergence in text


# ---------------------------------------------------------------------------
# Scatterplot SVG

def test_ticks_nice_values():
    assert _ticks(0.0, 1.0) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert _ticks(0.0, 10.0) == [0.0, 2.5, 5.0, 7.5, 10.0]


def test_ticks_degenerate_range_widens():
    assert _ticks(3.0, 3.0) == [2.0, 2.5, 3.0, 3.5, 4.0]


@pytest.mark.parametrize("lo,hi", [(0.0, 1.0), (-4.7, 13.2), (0.45, 0.47),
                                   (1e-4, 9e-4), (-250.0, 1750.0)])
def test_ticks_within_range_and_uniform(lo, hi):
    ticks = _ticks(lo, hi)
    assert len(ticks) >= 2
    step = ticks[1] - ticks[0]
    for a, b in zip(ticks, ticks[1:]):
        assert b - a == pytest.approx(step, rel=1e-9)
    for t in ticks:
        assert lo - 1e-9 * step <= t <= hi + 1e-9 * step
    mantissa = step / 10.0 ** math.floor(math.log10(step))
    assert min(abs(mantissa - m) for m in (1.0, 2.0, 2.5, 5.0)) < 1e-9


def svg_root(text: str) -> ET.Element:
    return ET.fromstring(text)


def test_scatter_svg_structure():
    x = [1.0, 2.0, 3.0, 4.0]
    y = [0.5, 0.7, 0.6, 0.9]
    root = svg_root(render_scatter_svg(x, y, "age (years)", "step length (m)",
                                       "step length vs age",
                                       trend=(0.4, 0.05)))
    assert root.get("width") == "640"
    assert root.get("height") == "480"
    circles = root.findall(f".//{SVG_NS}circle")
    assert len(circles) == 4
    for c in circles:
        assert c.get("fill") == "#d0622a"
        assert c.get("r") == "3"
    trend_lines = [e for e in root.findall(f".//{SVG_NS}line")
                   if e.get("stroke") == "#1f6fb2"]
    assert len(trend_lines) == 1
    texts = [e.text for e in root.findall(f".//{SVG_NS}text")]
    assert "step length vs age" in texts
    assert "age (years)" in texts
    assert "step length (m)" in texts


def test_scatter_svg_trend_suppressed():
    root = svg_root(render_scatter_svg([0.0, 1.0], [1.0, 2.0], "x", "y", "t"))
    assert all(e.get("stroke") != "#1f6fb2"
               for e in root.findall(f".//{SVG_NS}line"))


def test_scatter_svg_trend_line_matches_fit_geometry():
    # With trend y = 2 + 0x the line must be horizontal at the y=2 pixel row.
    text = render_scatter_svg([0.0, 10.0], [1.0, 3.0], "x", "y", "t",
                              trend=(2.0, 0.0))
    root = svg_root(text)
    line = [e for e in root.findall(f".//{SVG_NS}line")
            if e.get("stroke") == "#1f6fb2"][0]
    assert line.get("y1") == line.get("y2")
    y1 = float(line.get("y1"))
    # y=2 sits mid-range, so the pixel row is the plot-box vertical center.
    assert y1 == pytest.approx(40 + (480 - 40 - 52) / 2, abs=0.5)


def test_scatter_svg_escapes_labels():
    text = render_scatter_svg([0.0, 1.0], [0.0, 1.0], 'a<b', 'c&d', 'say "hi"')
    assert "&lt;b" in text
    assert "c&amp;d" in text
    assert "&quot;hi&quot;" in text
    root = svg_root(text)  # must stay well-formed XML
    texts = [e.text for e in root.findall(f".//{SVG_NS}text")]
    assert 'say "hi"' in texts


def test_scatter_svg_degenerate_extents():
    # Constant x and y still render: the range is widened by one unit each way.
    root = svg_root(render_scatter_svg([2.0, 2.0, 2.0], [5.0, 5.0, 5.0],
                                       "x", "y", "t"))
    assert len(root.findall(f".//{SVG_NS}circle")) == 3


def test_scatter_svg_rejects_bad_input():
    with pytest.raises(DataError, match="non-empty"):
        render_scatter_svg([], [], "x", "y", "t")
    with pytest.raises(DataError, match="matching"):
        render_scatter_svg([1.0, 2.0], [1.0], "x", "y", "t")


def test_scatter_svg_deterministic():
    args = ([0.1, 0.9, 0.4], [1.0, 2.0, 1.5], "x", "y", "t", (1.0, 0.5))
    assert render_scatter_svg(*args) == render_scatter_svg(*args)
