"""Command-line entry point.

Subcommands: ``run`` (full pipeline), ``stage <name>`` (one stage from
prior stage outputs), ``synth`` (write synthetic input CSVs), and
``report`` (summarize a finished run). Configuration comes from a JSON
file of RunConfig keys; every key can be overridden by a command-line
flag of the same name. Exit codes: 0 success, 1 internal error, 2 input
error, 3 missing upstream artifact.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import ConfigError, MissingArtifactError, SchemaError, VcnetError
from .ingest import generate_synthetic, write_deals, write_firms
from .pipeline import STAGES, RunConfig, load_manifest, run_pipeline, run_stage

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_MISSING_ARTIFACT = 3

_TUPLE_KEYS = ("start_years", "sweep_windows")
_BOOL_KEYS = ("kmeans_log_scale", "dump_graphs")
_INT_KEYS = ("window_years", "projection_window", "dendrogram_k", "kmeans_k", "kmeans_inits",
             "balance_reps", "top_n", "horizon", "seed", "config_limit")
_FLOAT_KEYS = ("skew_threshold",)
_STR_KEYS = ("out_dir", "deals_csv", "firms_csv", "frames_years")


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {raw!r}")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="JSON config file of RunConfig keys")
    for key in _STR_KEYS:
        parser.add_argument(f"--{key}", default=None)
    for key in _INT_KEYS:
        parser.add_argument(f"--{key}", type=int, default=None)
    for key in _FLOAT_KEYS:
        parser.add_argument(f"--{key}", type=float, default=None)
    for key in _BOOL_KEYS:
        parser.add_argument(f"--{key}", type=_parse_bool, default=None)
    for key in _TUPLE_KEYS:
        parser.add_argument(f"--{key}", nargs=2, type=int, default=None, metavar=("LO", "HI"))
    parser.add_argument("--synthetic", default=None, metavar="JSON",
                        help="inline JSON object of SyntheticConfig keys")


def _build_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    for key in _STR_KEYS + _INT_KEYS + _FLOAT_KEYS + _BOOL_KEYS:
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    for key in _TUPLE_KEYS:
        value = getattr(args, key)
        if value is not None:
            raw[key] = list(value)
    if args.synthetic is not None:
        try:
            raw["synthetic"] = json.loads(args.synthetic)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--synthetic is not valid JSON: {exc}") from exc
    if "out_dir" not in raw:
        raise ConfigError("out_dir must be set (flag --out_dir or config key)")
    return RunConfig.from_dict(raw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vcnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the full pipeline")
    _add_config_flags(p_run)

    p_stage = sub.add_parser("stage", help="run one pipeline stage")
    p_stage.add_argument("name", choices=STAGES)
    _add_config_flags(p_stage)

    p_synth = sub.add_parser("synth", help="write synthetic deals/firms CSVs")
    _add_config_flags(p_synth)

    p_report = sub.add_parser("report", help="summarize a finished run")
    p_report.add_argument("--out_dir", required=True)
    return parser


def _cmd_synth(cfg: RunConfig) -> int:
    if cfg.synthetic is None:
        raise ConfigError("synth requires a synthetic config section")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds = generate_synthetic(cfg.synthetic)
    write_deals(ds.deals, out / "deals.csv")
    write_firms([ds.firms[f] for f in sorted(ds.firms)], out / "firms.csv")
    with open(out / "planted_regimes.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("firm_id,regime\n")
        for firm in sorted(ds.planted_regimes):
            fh.write(f"{firm},{ds.planted_regimes[firm]}\n")
    print(f"wrote {len(ds.deals)} deals for {len(ds.firms)} firms under {out}")
    return EXIT_OK


def _cmd_report(out_dir: str) -> int:
    out = Path(out_dir)
    if not (out / "manifest.json").exists():
        raise MissingArtifactError(out / "manifest.json")
    manifest = load_manifest(out)
    print(f"vcnet {manifest.get('version', '?')} run in {out}")
    for stage in STAGES:
        entry = manifest.get("stages", {}).get(stage)
        if entry is None:
            print(f"  {stage:<12} (not run)")
            continue
        status = entry.get("status", "?")
        details = {k: v for k, v in entry.items() if k not in ("status",) and not k.endswith("sha256")}
        print(f"  {stage:<12} {status}  {json.dumps(details, sort_keys=True, default=str)[:240]}")
    traj = manifest.get("stages", {}).get("trajectories")
    if traj and traj.get("status") == "ok":
        print(f"regimes: {traj['n_high']} HIGH / {traj['n_low']} LOW "
              f"(share {traj['share_high']:.4f})")
    best_json = out / "regress" / "linear_agg_best.json"
    if best_json.exists():
        best = json.loads(best_json.read_text(encoding="utf-8"))
        print(f"best linear (aggregate) config: R^2={best['r2']:.4f}, "
              f"covariates: {', '.join(best['covariates'])}")
    backtest_csv = out / "backtest" / "backtest.csv"
    if backtest_csv.exists():
        with open(backtest_csv, "r", encoding="utf-8", newline="") as fh:
            rows = [r for r in csv.DictReader(fh) if r["start_year"] == "ALL"]
        rows.sort(key=lambda r: -float(r["success_rate"]))
        print("backtest mean success rates:")
        for r in rows[:5]:
            print(f"  {r['measure']:<28} {float(r['success_rate']):.4f}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return _cmd_report(args.out_dir)
        cfg = _build_config(args)
        if args.command == "synth":
            return _cmd_synth(cfg)
        if args.command == "run":
            manifest = run_pipeline(cfg)
            done = sum(1 for s in manifest["stages"].values() if s.get("status") == "ok")
            print(f"pipeline complete: {done}/{len(STAGES)} stages ok, artifacts in {cfg.out_dir}")
            return EXIT_OK
        counts = run_stage(args.name, cfg)
        print(f"stage {args.name} ok: {json.dumps(counts, sort_keys=True, default=str)[:240]}")
        return EXIT_OK
    except MissingArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACT
    except (ConfigError, SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except VcnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
