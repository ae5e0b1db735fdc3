"""Command-line client: file handling, exit codes, and output artifacts.

Commands run in-process against the ASGI app, exactly as the installed
entry point does when --server is not given.
"""

import json
import shutil
import subprocess

import pytest

from gaitug.cli import build_parser, main
from gaitug.io_ingest import render_imu, render_trajectory, render_covariates


@pytest.fixture(scope="module")
def cohort_dir(tmp_path_factory, small_cohort):
    """Cohort inputs on disk plus a metrics.csv produced by the analyze
    command, shared by the compare/lme/report tests."""
    root = tmp_path_factory.mktemp("cohort")
    traj_paths, imu_paths = [], []
    for res in small_cohort.trials:
        base = f"{res.trial.participant_id}_t{res.trial.trial_index}"
        tp = root / f"{base}.traj.csv"
        tp.write_text(render_trajectory(res.trial), encoding="utf-8")
        traj_paths.append(str(tp))
        ip = root / f"{base}.imu.csv"
        ip.write_text(render_imu(res.imu), encoding="utf-8")
        imu_paths.append(str(ip))
    cov = root / "covariates.csv"
    cov.write_text(render_covariates(list(small_cohort.covariates)),
                   encoding="utf-8")
    out = root / "analyzed"
    rc = main(["analyze", *traj_paths, "--out-dir", str(out)])
    assert rc == 0
    return {"root": root, "traj": traj_paths, "imu": imu_paths,
            "covariates": str(cov), "metrics": str(out / "metrics.csv")}


def write_junk(tmp_path, name="junk.traj.csv"):
    p = tmp_path / name
    p.write_text("definitely not a trajectory\n", encoding="utf-8")
    return str(p)


# ---------------------------------------------------------------------------
# Parser and dispatch

def test_no_arguments_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_unknown_command_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_parser_registers_all_subcommands():
    parser = build_parser()
    text = parser.format_help()
    for command in ("analyze", "synth", "compare", "lme", "report", "serve"):
        assert command in text


# ---------------------------------------------------------------------------
# synth

def test_synth_writes_trial_files(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["synth", "--out-dir", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["SYN001_t1.imu.csv", "SYN001_t1.traj.csv",
                     "SYN001_t1.truth.json"]
    assert "wrote 3 file(s)" in capsys.readouterr().out


def test_synth_seed_repeats_byte_identically(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["synth", "--seed", "7", "--out-dir", str(out_a)]) == 0
    assert main(["synth", "--seed", "7", "--out-dir", str(out_b)]) == 0
    for p in out_a.iterdir():
        assert p.read_bytes() == (out_b / p.name).read_bytes()


def test_synth_cohort_flag(tmp_path):
    out = tmp_path / "out"
    cfg = tmp_path / "cohort.json"
    cfg.write_text('{"cohort": {"n_participants": 2, '
                   '"trials_per_participant": 2, "seed": 3}}',
                   encoding="utf-8")
    assert main(["synth", "--config", str(cfg), "--out-dir", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert "covariates.csv" in names
    assert len(names) == 13


def test_synth_config_file_overrides(tmp_path):
    out = tmp_path / "out"
    cfg = tmp_path / "trial.json"
    cfg.write_text('{"participant_id": "Z1", "trial_index": 2}',
                   encoding="utf-8")
    assert main(["synth", "--config", str(cfg), "--out-dir", str(out)]) == 0
    assert (out / "Z1_t2.traj.csv").is_file()


def test_synth_rejects_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope", encoding="utf-8")
    assert main(["synth", "--config", str(bad)]) == 2
    assert "not valid JSON" in capsys.readouterr().err

    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]", encoding="utf-8")
    assert main(["synth", "--config", str(arr)]) == 2

    mixed = tmp_path / "mixed.json"
    mixed.write_text('{"cohort": {"seed": 1}, "fps": 30.0}', encoding="utf-8")
    assert main(["synth", "--config", str(mixed)]) == 2


def test_synth_invalid_generator_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"cadence_steps_per_s": 5.0}', encoding="utf-8")
    assert main(["synth", "--config", str(cfg), "--out-dir",
                 str(tmp_path / "out")]) == 2
    assert "error [config]" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# analyze

def test_analyze_writes_metrics_and_segmentations(tmp_path, capsys,
                                                  default_synth):
    traj = tmp_path / "SYN001_t1.traj.csv"
    traj.write_text(render_trajectory(default_synth.trial), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["analyze", str(traj), "--out-dir", str(out)]) == 0
    captured = capsys.readouterr()
    assert "analyzed 1 trial(s), 0 failure(s)" in captured.out
    metrics = (out / "metrics.csv").read_text(encoding="utf-8")
    assert metrics.splitlines()[0] == "# gaitug-metrics-v1"
    assert "SYN001,1," in metrics
    seg = json.loads((out / "SYN001_t1.segmentation.json")
                     .read_text(encoding="utf-8"))
    assert [e["name"] for e in seg["events"]] == ["sts1", "turn1", "turn2",
                                                  "sts2"]
    assert not (out / "failures.json").exists()


def test_analyze_si_units_flag(tmp_path, default_synth):
    traj = tmp_path / "t.traj.csv"
    traj.write_text(render_trajectory(default_synth.trial), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["analyze", str(traj), "--units", "si",
                 "--out-dir", str(out)]) == 0
    assert "# units: si" in (out / "metrics.csv").read_text(encoding="utf-8")


def test_analyze_partial_failure_keeps_good_rows(tmp_path, capsys,
                                                 default_synth):
    traj = tmp_path / "good.traj.csv"
    traj.write_text(render_trajectory(default_synth.trial), encoding="utf-8")
    junk = write_junk(tmp_path)
    out = tmp_path / "out"
    assert main(["analyze", str(traj), junk, "--out-dir", str(out)]) == 0
    captured = capsys.readouterr()
    assert "FAIL junk.traj.csv" in captured.err
    failures = json.loads((out / "failures.json").read_text(encoding="utf-8"))
    assert failures["failures"][0]["name"] == "junk.traj.csv"
    assert failures["failures"][0]["kind"] == "data"
    data_rows = [l for l in (out / "metrics.csv").read_text(encoding="utf-8")
                 .splitlines() if l and not l.startswith("#")]
    assert len(data_rows) == 2  # header + the surviving trial


def test_analyze_exits_1_when_nothing_succeeds(tmp_path, capsys):
    junk = write_junk(tmp_path)
    out = tmp_path / "out"
    assert main(["analyze", junk, "--out-dir", str(out)]) == 1
    assert (out / "failures.json").is_file()
    assert "FAIL" in capsys.readouterr().err


def test_analyze_missing_input_exits_2(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "absent.csv")]) == 2
    assert "input file not found" in capsys.readouterr().err


def test_analyze_invalid_override_exits_2(tmp_path, capsys, default_synth):
    traj = tmp_path / "t.traj.csv"
    traj.write_text(render_trajectory(default_synth.trial), encoding="utf-8")
    assert main(["analyze", str(traj), "--butter-order", "3",
                 "--out-dir", str(tmp_path / "out")]) == 2
    assert "error [config]" in capsys.readouterr().err


def test_analyze_repeat_runs_byte_identical(tmp_path, default_synth):
    traj = tmp_path / "t.traj.csv"
    traj.write_text(render_trajectory(default_synth.trial), encoding="utf-8")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["analyze", str(traj), "--out-dir", str(out_a)]) == 0
    assert main(["analyze", str(traj), "--out-dir", str(out_b)]) == 0
    for p in out_a.iterdir():
        assert p.read_bytes() == (out_b / p.name).read_bytes()


# ---------------------------------------------------------------------------
# compare

def test_compare_writes_agreement(tmp_path, capsys, cohort_dir):
    out = tmp_path / "out"
    rc = main(["compare", cohort_dir["metrics"], *cohort_dir["imu"],
               "--out-dir", str(out)])
    assert rc == 0
    assert "spearman rho=" in capsys.readouterr().out
    report = json.loads((out / "agreement.json").read_text(encoding="utf-8"))
    assert report["n_pairs"] == 18
    assert report["n_participants"] == 6


def test_compare_without_overlap_exits_1(tmp_path, capsys, cohort_dir,
                                         default_synth):
    stranger = tmp_path / "X9_t1.imu.csv"
    stranger.write_text(render_imu(default_synth.imu), encoding="utf-8")
    metrics = tmp_path / "metrics.csv"
    metrics.write_text("participant_id,trial_index,st_mean\nX0,1,0.5\n",
                       encoding="utf-8")
    rc = main(["compare", str(metrics), str(stranger),
               "--out-dir", str(tmp_path / "out")])
    assert rc == 1
    assert "error [analysis]" in capsys.readouterr().err


def test_compare_min_trials_flag(tmp_path, capsys, cohort_dir):
    rc = main(["compare", cohort_dir["metrics"], *cohort_dir["imu"],
               "--min-trials", "4", "--out-dir", str(tmp_path / "out")])
    assert rc == 1
    assert "error [analysis]" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# lme

def test_lme_writes_table_and_json(tmp_path, capsys, cohort_dir):
    out = tmp_path / "out"
    rc = main(["lme", cohort_dir["metrics"], cohort_dir["covariates"],
               "--outcome", "st_mean", "--predictors", "age",
               "--out-dir", str(out)])
    assert rc == 0
    assert capsys.readouterr().out.startswith("Outcome: st_mean")
    table = (out / "lme.txt").read_text(encoding="utf-8")
    assert "tau00 participant_id" in table
    fit = json.loads((out / "lme.json").read_text(encoding="utf-8"))
    assert fit["n_obs"] == 18
    assert [e["name"] for e in fit["effects"]] == ["(Intercept)", "age"]


def test_lme_multiple_predictors(tmp_path, cohort_dir):
    out = tmp_path / "out"
    rc = main(["lme", cohort_dir["metrics"], cohort_dir["covariates"],
               "--outcome", "st_mean", "--predictors", "age, btracks",
               "--out-dir", str(out)])
    assert rc == 0
    fit = json.loads((out / "lme.json").read_text(encoding="utf-8"))
    assert [e["name"] for e in fit["effects"]] == ["(Intercept)", "age",
                                                   "btracks"]


def test_lme_unknown_outcome_exits_2(tmp_path, capsys, cohort_dir):
    rc = main(["lme", cohort_dir["metrics"], cohort_dir["covariates"],
               "--outcome", "nope", "--predictors", "age",
               "--out-dir", str(tmp_path / "out")])
    assert rc == 2
    assert "error [usage]" in capsys.readouterr().err


def test_lme_empty_predictors_exits_2(tmp_path, capsys, cohort_dir):
    rc = main(["lme", cohort_dir["metrics"], cohort_dir["covariates"],
               "--outcome", "st_mean", "--predictors", " , ",
               "--out-dir", str(tmp_path / "out")])
    assert rc == 2
    assert "at least one predictor" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# report

def test_report_writes_plots_and_summary(tmp_path, capsys, cohort_dir):
    out = tmp_path / "out"
    rc = main(["report", cohort_dir["metrics"], cohort_dir["covariates"],
               "--out-dir", str(out)])
    assert rc == 0
    names = {p.name for p in out.iterdir()}
    assert "summary.json" in names
    assert "sl_mean_cm_vs_age.svg" in names
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["n_participants"] == 6
    assert summary["units"] == "report"


def test_report_without_shared_participants_exits_2(tmp_path, capsys,
                                                    cohort_dir):
    cov = tmp_path / "cov.csv"
    cov.write_text("# gaitug-covariates-v1\n"
                   "participant_id,age,steadi,short_fes_i,btracks\n"
                   "Z9,70,1,10,20\n", encoding="utf-8")
    rc = main(["report", cohort_dir["metrics"], str(cov),
               "--out-dir", str(tmp_path / "out")])
    assert rc == 2
    assert "share no participant_id" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# transport failures and the installed entry point

def test_unreachable_server_exits_1(tmp_path, capsys, default_synth):
    traj = tmp_path / "t.traj.csv"
    traj.write_text(render_trajectory(default_synth.trial), encoding="utf-8")
    rc = main(["--server", "http://127.0.0.1:9", "analyze", str(traj),
               "--out-dir", str(tmp_path / "out")])
    assert rc == 1
    assert "error [connection]" in capsys.readouterr().err


def test_console_script_entry_point(tmp_path):
    script = shutil.which("gaitug")
    if script is None:
        pytest.skip("gaitug entry point not on PATH")
    out = tmp_path / "out"
    proc = subprocess.run([script, "synth", "--out-dir", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert (out / "SYN001_t1.traj.csv").is_file()
