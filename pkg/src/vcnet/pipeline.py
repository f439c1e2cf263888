"""End-to-end pipeline stages with a reproducible run manifest.

Stages run in the order ingest, graph, centrality, features,
trajectories, regress, backtest. Each stage reads only files written by
earlier stages (or the configured inputs), so any stage can be rerun in
isolation; rerunning with unchanged inputs rewrites identical bytes.
The manifest echoes the configuration, input digests, per-stage counts
and the package version, and never contains timestamps, so two runs
with the same config and seed produce byte-identical artifact trees.
"""

from __future__ import annotations

import hashlib
import json
import warnings as _warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .backtest import run_strategy, write_backtest_csv
from .centrality import (COMMON_MEASURES, FIRM_ONLY_MEASURES, assemble_covariates, compute_frame,
                         covariate_columns, read_covariates_csv, read_frames_csv,
                         write_covariates_csv, write_frames_csv)
from .errors import ConfigError, MissingArtifactError
from .features import (correlation_dendrogram, cut_groups, enumerate_configs,
                       matrix_from_covariates, preprocess, read_configs_csv,
                       read_feature_matrix_csv, read_grouping_csv, write_configs_csv,
                       write_dendrogram_csv, write_feature_matrix_csv, write_grouping_csv,
                       write_transforms_csv)
from .graph import BOTH, FIRM, INVESTOR, build_bipartite, first_rounds, project_firms, \
    project_investors, write_projection_csv
from .ingest import (SyntheticConfig, generate_synthetic, parse_deals, read_deals_csv,
                     read_firms_csv, write_deals, write_firms, write_rejects)
from .regress import (PipelineData, balanced_ensemble, build_controls, confusion_vs_standard,
                      fit_function_on_scalar, linear_fit_dict, logistic_fit_dict,
                      perturbation_sweep, select_model, window_sweep, write_functional_curves,
                      write_leaderboard_csv, write_perturbation_csv)
from .seeding import derive_seed
from .trajectories import (HIGH, build_trajectories, functional_kmeans, read_assignments_csv,
                           read_trajectories_csv, regime_rates, write_assignments_csv,
                           write_centroids_csv, write_exclusions_csv, write_trajectories_csv)

STAGES = ("ingest", "graph", "centrality", "features", "trajectories", "regress", "backtest")


@dataclass
class RunConfig:
    """Pipeline parameters; exactly one of input CSVs or synthetic config."""

    out_dir: str
    deals_csv: str | None = None
    firms_csv: str | None = None
    synthetic: SyntheticConfig | None = None
    window_years: int = 10
    projection_window: int = 7
    dendrogram_k: int = 7
    skew_threshold: float = 1.0
    kmeans_k: int = 2
    kmeans_inits: int = 100
    kmeans_log_scale: bool = True
    balance_reps: int = 1000
    top_n: int = 25
    horizon: int = 8
    start_years: tuple[int, int] = (2000, 2010)
    sweep_windows: tuple[int, int] = (5, 12)
    seed: int = 7
    config_limit: int = 0
    dump_graphs: bool = False
    frames_years: str = "needed"  # needed | all

    def validate(self) -> None:
        has_files = self.deals_csv is not None or self.firms_csv is not None
        if has_files and (self.deals_csv is None or self.firms_csv is None):
            raise ConfigError("deals_csv and firms_csv must be given together")
        if has_files == (self.synthetic is not None):
            raise ConfigError("exactly one of {deals_csv+firms_csv, synthetic} must be configured")
        if not 5 <= self.window_years <= 12:
            raise ConfigError(f"window_years must lie in [5, 12], got {self.window_years}")
        if self.projection_window < 1:
            raise ConfigError("projection_window must be >= 1")
        if min(self.dendrogram_k, self.kmeans_k, self.kmeans_inits,
               self.balance_reps, self.top_n) < 1:
            raise ConfigError("dendrogram_k, kmeans_k, kmeans_inits, balance_reps and top_n must be >= 1")
        if self.horizon not in (6, 7, 8):
            raise ConfigError(f"horizon must be one of (6, 7, 8), got {self.horizon}")
        lo, hi = self.start_years
        if lo > hi:
            raise ConfigError(f"start_years range {self.start_years} is empty")
        wlo, whi = self.sweep_windows
        if not (5 <= wlo <= whi <= 12):
            raise ConfigError(f"sweep_windows must lie within [5, 12], got {self.sweep_windows}")
        if self.config_limit < 0:
            raise ConfigError("config_limit must be >= 0 (0 = unlimited)")
        if self.frames_years not in ("needed", "all"):
            raise ConfigError("frames_years must be 'needed' or 'all'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start_years"] = list(self.start_years)
        d["sweep_windows"] = list(self.sweep_windows)
        if self.synthetic is not None:
            d["synthetic"] = asdict(self.synthetic)
            d["synthetic"]["year_range"] = list(self.synthetic.year_range)
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        data = dict(raw)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if data.get("synthetic") is not None:
            syn = dict(data["synthetic"])
            if "year_range" in syn:
                syn["year_range"] = tuple(syn["year_range"])
            try:
                data["synthetic"] = SyntheticConfig(**syn)
            except TypeError as exc:
                raise ConfigError(f"bad synthetic config: {exc}") from exc
        for key in ("start_years", "sweep_windows"):
            if key in data and data[key] is not None:
                data[key] = tuple(data[key])
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from exc
        return cfg


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

def _manifest_path(out: Path) -> Path:
    return out / "manifest.json"


def load_manifest(out: Path) -> dict:
    path = _manifest_path(out)
    if path.exists():
        return json.loads(path.read_text(encoding="utf-8"))
    return {"version": __version__, "stages": {}}


def save_manifest(out: Path, manifest: dict) -> None:
    path = _manifest_path(out)
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingArtifactError(path)
    return path


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def stage_ingest(cfg: RunConfig, out: Path) -> dict:
    stage_dir = out / "ingest"
    stage_dir.mkdir(parents=True, exist_ok=True)
    counts: dict = {}
    if cfg.synthetic is not None:
        ds = generate_synthetic(cfg.synthetic)
        write_deals(ds.deals, stage_dir / "deals.csv")
        write_firms([ds.firms[f] for f in sorted(ds.firms)], stage_dir / "firms.csv")
        write_rejects([], stage_dir / "rejects_deals.csv")
        write_rejects([], stage_dir / "rejects_firms.csv")
        with open(stage_dir / "planted_regimes.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("firm_id,regime\n")
            for firm in sorted(ds.planted_regimes):
                fh.write(f"{firm},{ds.planted_regimes[firm]}\n")
        counts.update(n_deals=len(ds.deals), n_firms=len(ds.firms),
                      n_deal_rejects=0, n_firm_rejects=0, source="synthetic")
    else:
        with open(cfg.deals_csv, "rb") as dfh, open(cfg.firms_csv, "rb") as ffh:
            result = parse_deals(dfh, ffh)
        write_deals(result.deals, stage_dir / "deals.csv")
        write_firms([result.firms[f] for f in sorted(result.firms)], stage_dir / "firms.csv")
        write_rejects(result.deal_rejects, stage_dir / "rejects_deals.csv")
        write_rejects(result.firm_rejects, stage_dir / "rejects_firms.csv")
        counts.update(n_deals=len(result.deals), n_firms=len(result.firms),
                      n_deal_rejects=len(result.deal_rejects),
                      n_firm_rejects=len(result.firm_rejects),
                      warnings=len(result.warnings), source="csv")
    counts["deals_sha256"] = _sha256(stage_dir / "deals.csv")
    counts["firms_sha256"] = _sha256(stage_dir / "firms.csv")
    return counts


def _load_ingested(out: Path):
    deals = read_deals_csv(_require(out / "ingest" / "deals.csv"))
    firms = read_firms_csv(_require(out / "ingest" / "firms.csv"))
    return deals, firms


def stage_graph(cfg: RunConfig, out: Path) -> dict:
    deals, _ = _load_ingested(out)
    g = build_bipartite(deals)
    stage_dir = out / "graph"
    stage_dir.mkdir(parents=True, exist_ok=True)
    with open(stage_dir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("year,n_nodes,n_firm_role,n_investor_role,n_both_role,n_edges\n")
        for year in g.years():
            snap = g.snapshot_deals(year)
            firm_side = {d.firm_id for d in snap}
            inv_side = {d.investor_id for d in snap}
            both = firm_side & inv_side
            fh.write(f"{year},{len(firm_side | inv_side)},{len(firm_side - both)},"
                     f"{len(inv_side - both)},{len(both)},{len(snap)}\n")
    if cfg.dump_graphs:
        for year in _frame_years(cfg, g):
            write_projection_csv(project_firms(g, year, cfg.projection_window), stage_dir)
            write_projection_csv(project_investors(g, year), stage_dir)
    roles = list(g.roles.values())
    return {"n_nodes": len(g), "n_edges": len(g.edges),
            "n_firm_role": roles.count(FIRM), "n_investor_role": roles.count(INVESTOR),
            "n_both_role": roles.count(BOTH),
            "years": [g.min_year, g.max_year] if g.min_year is not None else None}


def _frame_years(cfg: RunConfig, g) -> list[int]:
    if g.min_year is None:
        return []
    if cfg.frames_years == "all":
        return list(g.years())
    years = {fr.date.year for fr in first_rounds(g).values()}
    lo, hi = cfg.start_years
    years.update(y for y in range(lo, hi + 1) if g.min_year <= y <= g.max_year)
    return sorted(years)


def stage_centrality(cfg: RunConfig, out: Path) -> dict:
    deals, _ = _load_ingested(out)
    g = build_bipartite(deals)
    stage_dir = out / "centrality"
    stage_dir.mkdir(parents=True, exist_ok=True)
    frames = []
    covariates = []
    for year in _frame_years(cfg, g):
        firm_frame = compute_frame(project_firms(g, year, cfg.projection_window), g)
        inv_frame = compute_frame(project_investors(g, year))
        frames.extend([firm_frame, inv_frame])
        covariates.extend(assemble_covariates(firm_frame, inv_frame, g))
    write_frames_csv(frames, stage_dir / "frames.csv")
    write_covariates_csv(covariates, stage_dir / "covariates.csv")
    return {"n_years": len(frames) // 2, "n_covariate_rows": len(covariates),
            "n_flagged_rows": sum(1 for c in covariates if c.investor_measures_missing)}


def stage_features(cfg: RunConfig, out: Path) -> dict:
    covs = read_covariates_csv(_require(out / "centrality" / "covariates.csv"))
    stage_dir = out / "features"
    stage_dir.mkdir(parents=True, exist_ok=True)
    feature_cols = [c for c in covariate_columns() if c != "first_amount"]
    raw = matrix_from_covariates(covs, feature_cols)
    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        fm = preprocess(raw, cfg.skew_threshold)
    fg = cut_groups(correlation_dendrogram(fm), cfg.dendrogram_k)
    configs = enumerate_configs(fg)
    write_feature_matrix_csv(fm, stage_dir / "features.csv")
    write_transforms_csv(fm, stage_dir / "transforms.csv")
    write_dendrogram_csv(fg, stage_dir / "dendrogram.csv")
    write_grouping_csv(fg, stage_dir / "groups.csv")
    write_configs_csv(configs, stage_dir / "configs.csv")
    return {"n_features": len(fm.columns), "n_dropped": len(fm.dropped),
            "n_groups": cfg.dendrogram_k, "n_configs": len(configs)}


def stage_trajectories(cfg: RunConfig, out: Path) -> dict:
    deals, firms = _load_ingested(out)
    stage_dir = out / "trajectories"
    stage_dir.mkdir(parents=True, exist_ok=True)
    ts = build_trajectories(deals, firms, cfg.window_years)
    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        ca = functional_kmeans(ts.trajectories, k=cfg.kmeans_k, n_init=cfg.kmeans_inits,
                               seed=derive_seed(cfg.seed, "trajectories"),
                               log_scale=cfg.kmeans_log_scale)
    write_trajectories_csv(ts, stage_dir / "trajectories.csv")
    write_exclusions_csv(ts, stage_dir / "exclusions.csv")
    write_assignments_csv(ca, stage_dir / "assignments.csv")
    write_centroids_csv(ca, stage_dir / "centroids.csv")
    n_high, n_low, share = regime_rates(ca)
    return {"n_retained": len(ts.trajectories), "n_excluded": len(ts.exclusions),
            "n_high": n_high, "n_low": n_low, "share_high": share,
            "kmeans_warnings": len(ca.warnings)}


def stage_regress(cfg: RunConfig, out: Path) -> dict:
    deals, firms = _load_ingested(out)
    covs = read_covariates_csv(_require(out / "centrality" / "covariates.csv"))
    fm = read_feature_matrix_csv(_require(out / "features" / "features.csv"))
    groups = read_grouping_csv(_require(out / "features" / "groups.csv"))
    configs = read_configs_csv(_require(out / "features" / "configs.csv"))
    ts = read_trajectories_csv(_require(out / "trajectories" / "trajectories.csv"))
    regimes = read_assignments_csv(_require(out / "trajectories" / "assignments.csv"))
    stage_dir = out / "regress"
    stage_dir.mkdir(parents=True, exist_ok=True)

    first_amounts = {c.firm_id: c.values["first_amount"] for c in covs}
    first_years = {c.firm_id: c.first_year for c in covs}
    subsectors = {t.firm_id: t.subsector for t in ts.trajectories}
    in_fm = set(fm.row_ids)
    trajs = [t for t in ts.trajectories if t.firm_id in in_fm]
    firms_fit = [t.firm_id for t in trajs]
    sub_fm = fm.take_rows(firms_fit)

    info: dict = {"n_fit_firms": len(firms_fit), "truncated": False}

    # Binary response: HIGH/LOW regime membership.
    y_bin = np.array([1.0 if regimes[f] == HIGH else 0.0 for f in firms_fit])
    sel_log = select_model("logistic", y_bin, sub_fm, configs, limit=cfg.config_limit)
    write_leaderboard_csv(sel_log, stage_dir / "logistic_leaderboard.csv")
    info["truncated"] = info["truncated"] or sel_log.truncated
    best_log = sel_log.best
    if best_log is None:
        raise ConfigError("no logistic configuration converged")
    payload = logistic_fit_dict(best_log.fit)
    payload.update(config_id=best_log.config_id, covariates=list(best_log.covariates),
                   window_years=cfg.window_years)
    (stage_dir / "logistic_best.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    info["logistic_best_ll"] = best_log.fit.log_likelihood
    info["logistic_best_pseudo_r2"] = best_log.fit.pseudo_r2
    info["logistic_configs_fit"] = len(sel_log.results)

    ens = balanced_ensemble(y_bin, sub_fm.select(best_log.covariates), n_reps=cfg.balance_reps,
                            seed=derive_seed(cfg.seed, "regress", "balanced"),
                            columns=list(best_log.covariates))
    ens_payload = {
        "columns": ens.columns,
        "coef_mean": [float(x) for x in ens.coef_mean],
        "coef_sd": [float(x) for x in ens.coef_sd],
        "mean_log_likelihood": ens.mean_log_likelihood,
        "mean_pseudo_r2": ens.mean_pseudo_r2,
        "max_pseudo_r2": ens.max_pseudo_r2,
        "n_reps": ens.n_reps,
        "n_discarded": ens.n_discarded,
    }
    (stage_dir / "balanced_ensemble.json").write_text(
        json.dumps(ens_payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    with open(stage_dir / "balanced_replicates.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("replicate,term,estimate,p_value\n")
        for r in range(ens.n_reps):
            for j, term in enumerate(ens.columns):
                fh.write(f"{r},{term},{ens.coefs[r, j]!r},{ens.p_values[r, j]!r}\n")
    info["ensemble_reps"] = ens.n_reps
    info["ensemble_discarded"] = ens.n_discarded

    # Scalar responses: log aggregate and log differential money raised.
    y_agg = np.log1p(np.array([t.values[-1] for t in trajs], dtype=float))
    C_agg, agg_names = build_controls(firms_fit, first_amounts, subsectors, True)
    sel_agg = select_model("linear", y_agg, sub_fm, configs, C_agg, agg_names,
                           limit=cfg.config_limit)
    write_leaderboard_csv(sel_agg, stage_dir / "linear_agg_leaderboard.csv")
    info["truncated"] = info["truncated"] or sel_agg.truncated
    best_agg = sel_agg.best
    if best_agg is None:
        raise ConfigError("no linear (aggregate) configuration could be fit")
    payload = linear_fit_dict(best_agg.fit)
    payload.update(config_id=best_agg.config_id, covariates=list(best_agg.covariates),
                   window_years=cfg.window_years, response="log_aggregate_money")
    (stage_dir / "linear_agg_best.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    info["linear_agg_best_r2"] = best_agg.fit.r2

    diffs = np.array([t.values[-1] - first_amounts[t.firm_id] for t in trajs])
    keep = diffs > 0
    diff_firms = [f for f, k in zip(firms_fit, keep) if k]
    info["n_diff_dropped"] = int((~keep).sum())
    y_diff = np.log1p(diffs[keep])
    C_diff, diff_names = build_controls(diff_firms, first_amounts, subsectors, False)
    sel_diff = select_model("linear", y_diff, sub_fm.take_rows(diff_firms), configs,
                            C_diff, diff_names, limit=cfg.config_limit)
    write_leaderboard_csv(sel_diff, stage_dir / "linear_diff_leaderboard.csv")
    best_diff = sel_diff.best
    if best_diff is not None:
        payload = linear_fit_dict(best_diff.fit)
        payload.update(config_id=best_diff.config_id, covariates=list(best_diff.covariates),
                       window_years=cfg.window_years, response="log_differential_money")
        (stage_dir / "linear_diff_best.json").write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        info["linear_diff_best_r2"] = best_diff.fit.r2

    # Functional response reuses the covariates selected for the aggregate fit.
    Y = np.array([t.values for t in trajs], dtype=float)
    fos = fit_function_on_scalar(Y, sub_fm.select(best_agg.covariates),
                                 list(best_agg.covariates))
    write_functional_curves(fos, stage_dir)

    # Stability sweeps.
    all_subsectors = {f: (firms[f].subsector if f in firms else "") for f in fm.row_ids}
    data = PipelineData(deals, firms, fm, first_amounts, all_subsectors,
                        None, cfg.kmeans_k, cfg.kmeans_inits,
                        derive_seed(cfg.seed, "regress", "sweep-kmeans"), cfg.kmeans_log_scale)
    wlo, whi = cfg.sweep_windows
    w_range = list(range(wlo, whi + 1))
    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        sweep_lin = window_sweep(data, best_agg.covariates, w_range, "linear_agg")
        sweep_log = window_sweep(data, best_log.covariates, w_range, "logistic")
    with open(stage_dir / "window_sweep.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("kind,window,n_firms,term,t,estimate,se,lo95,hi95\n")
        for kind, rows in (("linear_agg", sweep_lin.rows), ("logistic", sweep_log.rows)):
            for r in rows:
                fh.write(f"{kind},{r.window},{r.n_firms},{r.term},"
                         f"{'' if r.grid_t is None else r.grid_t},"
                         f"{r.estimate!r},{r.se!r},{r.lo95!r},{r.hi95!r}\n")
    info["sweep_firm_counts"] = {str(w): n for w, n in sweep_lin.firm_counts.items()}
    info["sweep_warnings"] = sweep_lin.warnings + sweep_log.warnings

    pert = perturbation_sweep(groups, sel_agg)
    write_perturbation_csv(pert, stage_dir / "perturbation_groups.csv",
                           stage_dir / "perturbation_samples.csv")

    conf = confusion_vs_standard(regimes, firms, first_years, cfg.window_years)
    (stage_dir / "confusion.json").write_text(
        json.dumps({"tp": conf.tp, "fn": conf.fn, "fp": conf.fp, "tn": conf.tn,
                    "accuracy": conf.accuracy, "precision": conf.precision,
                    "recall": conf.recall}, sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    info["confusion_accuracy"] = conf.accuracy
    return info


def stage_backtest(cfg: RunConfig, out: Path) -> dict:
    frames_all = read_frames_csv(_require(out / "centrality" / "frames.csv"))
    covs = read_covariates_csv(_require(out / "centrality" / "covariates.csv"))
    _, firms = _load_ingested(out)
    groups_path = out / "features" / "groups.csv"
    groups = read_grouping_csv(groups_path) if groups_path.exists() else {}
    stage_dir = out / "backtest"
    stage_dir.mkdir(parents=True, exist_ok=True)

    firm_frames = {year: frame for (year, layer), frame in frames_all.items() if layer == FIRM}
    first_years = {c.firm_id: c.first_year for c in covs}
    reports = []
    for measure in list(COMMON_MEASURES) + list(FIRM_ONLY_MEASURES):
        rep = run_strategy(firm_frames, firms, first_years, measure,
                           top_n=cfg.top_n, horizon=cfg.horizon, start_years=cfg.start_years)
        rep.group = groups.get(f"{measure}_org", groups.get(measure))
        reports.append(rep)
    write_backtest_csv(reports, stage_dir / "backtest.csv")
    best = max(reports, key=lambda r: r.mean_rate)
    return {"n_measures": len(reports),
            "n_start_years": cfg.start_years[1] - cfg.start_years[0] + 1,
            "best_measure": best.measure, "best_mean_rate": best.mean_rate}


_STAGE_FNS = {
    "ingest": stage_ingest,
    "graph": stage_graph,
    "centrality": stage_centrality,
    "features": stage_features,
    "trajectories": stage_trajectories,
    "regress": stage_regress,
    "backtest": stage_backtest,
}


def _check_inputs(cfg: RunConfig) -> None:
    if cfg.synthetic is None:
        for path in (cfg.deals_csv, cfg.firms_csv):
            if not Path(path).exists():
                raise ConfigError(f"input file not found: {path}")


def run_stage(name: str, cfg: RunConfig) -> dict:
    """Run a single stage against the configured output directory."""
    if name not in _STAGE_FNS:
        raise ConfigError(f"unknown stage {name!r}; expected one of {', '.join(STAGES)}")
    cfg.validate()
    if name == "ingest":
        _check_inputs(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(out)
    manifest["version"] = __version__
    manifest["config"] = cfg.to_dict()
    try:
        counts = _STAGE_FNS[name](cfg, out)
    except Exception as exc:
        manifest["stages"][name] = {"status": "failed", "error": str(exc)}
        save_manifest(out, manifest)
        raise
    manifest["stages"][name] = {"status": "ok", **counts}
    save_manifest(out, manifest)
    return counts


def run_pipeline(cfg: RunConfig) -> dict:
    """Run every stage in order; returns the final manifest."""
    cfg.validate()
    _check_inputs(cfg)
    for name in STAGES:
        run_stage(name, cfg)
    return load_manifest(Path(cfg.out_dir))
