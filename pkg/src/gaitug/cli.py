"""Command-line client for the analysis service.

Each subcommand reads local files, posts one request to the service, and
writes the returned files. By default the service runs in-process behind an
ASGI transport; --server points the same commands at a remote instance.

Exit codes: 0 success, 1 analysis/data failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from .errors import ConfigError, GaitugError

_USAGE_KINDS = ("usage", "config")
_TIMEOUT = httpx.Timeout(600.0)


class ServiceError(Exception):
    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(message)

    @property
    def exit_code(self) -> int:
        return 2 if self.kind in _USAGE_KINDS else 1


def _post(server: str | None, path: str, payload: dict) -> dict:
    if server is None:
        from .service import app

        async def go():
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(transport=transport, timeout=_TIMEOUT,
                                         base_url="http://gaitug.internal") as client:
                return await client.post(path, json=payload)

        response = asyncio.run(go())
    else:
        with httpx.Client(base_url=server, timeout=_TIMEOUT) as client:
            response = client.post(path, json=payload)
    if response.status_code >= 400:
        try:
            body = response.json()
        except ValueError:
            raise ServiceError("analysis",
                               f"service returned HTTP {response.status_code}")
        raise ServiceError(body.get("kind", "analysis"),
                           body.get("message", f"HTTP {response.status_code}"))
    return response.json()


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"input file not found: {path}")
    return p.read_text(encoding="utf-8")


def _write_files(out_dir: str, files: list[dict]) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for nf in files:
        target = out / nf["name"]
        target.write_text(nf["content"], encoding="utf-8", newline="\n")
        written.append(str(target))
    return written


def _param_overrides(args) -> dict:
    keys = ("sigma", "butter_cutoff_hz", "butter_order", "peak_height_k",
            "peak_dist_frac", "step_min_separation_s", "imu_corroboration_s")
    return {k: getattr(args, k) for k in keys
            if getattr(args, k, None) is not None}


# ---------------------------------------------------------------------------
# Subcommands

def cmd_analyze(args) -> int:
    if not args.trajectories:
        raise ConfigError("no trajectory files given")
    payload = {
        "trajectories": [{"name": Path(p).name, "content": _read_text(p)}
                         for p in args.trajectories],
        "units": args.units,
    }
    overrides = _param_overrides(args)
    if overrides:
        payload["overrides"] = overrides
    if args.fps is not None:
        payload["fps_override"] = args.fps
    if args.threads is not None:
        payload["threads"] = args.threads
    body = _post(args.server, "/v1/analyze", payload)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(body["metrics_csv"], encoding="utf-8",
                                     newline="\n")
    _write_files(args.out_dir, body["segmentations"])
    if body["failures"]:
        failures = {"failures": body["failures"]}
        (out / "failures.json").write_text(
            json.dumps(failures, indent=2) + "\n", encoding="utf-8", newline="\n")
    for f in body["failures"]:
        print(f"FAIL {f['name']}: [{f['kind']}] {f['message']}", file=sys.stderr)
    print(f"analyzed {body['n_ok']} trial(s), {body['n_failed']} failure(s); "
          f"metrics in {out / 'metrics.csv'}")
    return 0 if body["n_ok"] >= 1 else 1


def cmd_synth(args) -> int:
    config: dict = {}
    if args.config is not None:
        try:
            config = json.loads(_read_text(args.config))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(config, dict):
            raise ConfigError("config file must hold a JSON object")
    payload: dict = {}
    cohort = config.pop("cohort", None)
    if args.cohort and cohort is None:
        cohort = {}
    if cohort is not None:
        if config:
            raise ConfigError("config file mixes cohort and single-trial keys")
        if args.seed is not None:
            cohort["seed"] = args.seed
        if args.fps is not None:
            cohort["fps"] = args.fps
        payload["cohort"] = cohort
    else:
        if args.seed is not None:
            config["seed"] = args.seed
        if args.fps is not None:
            config["fps"] = args.fps
        payload["config"] = config
    body = _post(args.server, "/v1/synth", payload)
    written = _write_files(args.out_dir, body["files"])
    print(f"wrote {len(written)} file(s) to {args.out_dir}")
    return 0


def cmd_compare(args) -> int:
    payload = {
        "metrics_csv": _read_text(args.metrics),
        "imu_files": [{"name": Path(p).name, "content": _read_text(p)}
                      for p in args.imu_files],
        "min_trials": args.min_trials,
    }
    body = _post(args.server, "/v1/compare", payload)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "agreement.json").write_text(body["report_json"], encoding="utf-8",
                                        newline="\n")
    rep = body["report"]
    print(f"spearman rho={rep['spearman_rho']:.3f} p={rep['spearman_p']:.4g} "
          f"n={rep['n_pairs']} bias_s={rep['bias_s']:.4f}")
    return 0


def cmd_lme(args) -> int:
    predictors = [p.strip() for p in args.predictors.split(",") if p.strip()]
    if not predictors:
        raise ConfigError("at least one predictor is required")
    payload = {
        "metrics_csv": _read_text(args.metrics),
        "covariates_csv": _read_text(args.covariates),
        "outcome": args.outcome,
        "predictors": predictors,
    }
    if args.fix_variance_ratio is not None:
        payload["fix_variance_ratio"] = args.fix_variance_ratio
    body = _post(args.server, "/v1/lme", payload)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "lme.json").write_text(body["fit_json"], encoding="utf-8", newline="\n")
    (out / "lme.txt").write_text(body["table"], encoding="utf-8", newline="\n")
    print(body["table"], end="")
    return 0


def cmd_report(args) -> int:
    payload = {
        "metrics_csv": _read_text(args.metrics),
        "covariates_csv": _read_text(args.covariates),
        "units": args.units,
    }
    body = _post(args.server, "/v1/report", payload)
    written = _write_files(args.out_dir, body["files"])
    print(f"wrote {len(written)} file(s) to {args.out_dir}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaitug",
        description="Gait metrics and TUG segmentation from joint trajectories")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service "
                             "(default: run in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, units=False):
        p.add_argument("--out-dir", default="gaitug-out",
                       help="output directory (default: gaitug-out)")
        if units:
            p.add_argument("--units", choices=("report", "si"), default="report",
                           help="report units (cm/mm) or SI (meters)")

    p = sub.add_parser("analyze", help="segment trials and extract gait metrics")
    p.add_argument("trajectories", nargs="+", metavar="TRAJECTORY_CSV")
    add_common(p, units=True)
    p.add_argument("--fps", type=float, default=None,
                   help="override the declared capture rate")
    p.add_argument("--sigma", type=float, default=None,
                   help="Gaussian smoothing sigma in samples (default 3)")
    p.add_argument("--butter-cutoff-hz", dest="butter_cutoff_hz", type=float,
                   default=None, help="low-pass cutoff (default 2)")
    p.add_argument("--butter-order", dest="butter_order", type=int, default=None,
                   help="low-pass order, even (default 4)")
    p.add_argument("--peak-height-k", dest="peak_height_k", type=float,
                   default=None, help="adaptive threshold factor (default 0.8)")
    p.add_argument("--peak-dist-frac", dest="peak_dist_frac", type=float,
                   default=None, help="adaptive distance fraction (default 0.7)")
    p.add_argument("--step-min-separation-s", dest="step_min_separation_s",
                   type=float, default=None,
                   help="step refractory period in seconds (default 0.3)")
    p.add_argument("--imu-corroboration-s", dest="imu_corroboration_s",
                   type=float, default=None,
                   help="gyro/accel corroboration window (default 0.15)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker pool size (default: GAITUG_THREADS or host "
                        "parallelism)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="generate synthetic trials with ground truth")
    add_common(p)
    p.add_argument("--config", default=None,
                   help="JSON config file (single trial fields, or "
                        "{\"cohort\": {...}})")
    p.add_argument("--cohort", action="store_true",
                   help="generate a default cohort instead of one trial")
    p.add_argument("--seed", type=int, default=None, help="override the seed")
    p.add_argument("--fps", type=float, default=None,
                   help="override the capture rate")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("compare",
                       help="video vs insole step-time agreement")
    p.add_argument("metrics", metavar="METRICS_CSV")
    p.add_argument("imu_files", nargs="+", metavar="IMU_CSV")
    add_common(p)
    p.add_argument("--min-trials", type=int, default=3,
                   help="per-participant paired-trial minimum (default 3)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("lme", help="random-intercept mixed model over trials")
    p.add_argument("metrics", metavar="METRICS_CSV")
    p.add_argument("covariates", metavar="COVARIATES_CSV")
    add_common(p)
    p.add_argument("--outcome", required=True, help="outcome column name")
    p.add_argument("--predictors", required=True,
                   help="comma-separated predictor columns")
    p.add_argument("--fix-variance-ratio", dest="fix_variance_ratio", type=float,
                   default=None,
                   help="fix tau00/sigma2 instead of profiling it")
    p.set_defaults(func=cmd_lme)

    p = sub.add_parser("report", help="scatterplots + summary from metrics")
    p.add_argument("metrics", metavar="METRICS_CSV")
    p.add_argument("covariates", metavar="COVARIATES_CSV")
    add_common(p, units=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8450)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ServiceError as exc:
        print(f"error [{exc.kind}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except GaitugError as exc:
        print(f"error [{exc.kind}]: {exc}", file=sys.stderr)
        return 2 if exc.kind in _USAGE_KINDS else 1
    except httpx.HTTPError as exc:
        print(f"error [connection]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
