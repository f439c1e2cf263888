"""Logistic/linear/functional fits, selection, sweeps, and the confusion matrix."""

import math

import numpy as np
import pytest

from vcnet.errors import ConfigError, RankDeficientError
from vcnet.features import FeatureMatrix
from vcnet.ingest import FirmMeta, SyntheticConfig, generate_synthetic
from vcnet.regress import (PipelineData, balanced_ensemble, build_controls, confusion_metrics,
                           confusion_vs_standard, fit_function_on_scalar, fit_linear, fit_logistic,
                           perturbation_sweep, select_model, window_sweep)
from vcnet.trajectories import HIGH, LOW, ClusterAssignment, build_trajectories


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def fm_from(data, columns):
    data = np.asarray(data, dtype=float)
    return FeatureMatrix([f"r{i}" for i in range(data.shape[0])], list(columns), data)


class TestFitLogistic:
    def test_intercept_only_analytic_mle(self):
        y = np.array([1.0] * 25 + [0.0] * 75)
        fit = fit_logistic(y, np.empty((100, 0)))
        assert fit.converged
        assert fit.coef[0] == pytest.approx(math.log(1 / 3), abs=1e-9)

    def test_intercept_only_pseudo_r2_is_zero(self):
        y = np.array([1.0] * 25 + [0.0] * 75)
        fit = fit_logistic(y, np.empty((100, 0)))
        assert fit.pseudo_r2 == pytest.approx(0.0, abs=1e-12)

    def test_recovers_planted_coefficients(self):
        rng = np.random.default_rng(31)
        n = 10000
        x = rng.normal(size=n)
        y = (rng.random(n) < sigmoid(0.0 + 1.5 * x)).astype(float)
        fit = fit_logistic(y, x, ["x"])
        assert fit.converged
        assert abs(fit.coef[0] - 0.0) < 3 * fit.se[0]
        assert abs(fit.coef[1] - 1.5) < 3 * fit.se[1]

    def test_score_equations_hold_at_convergence(self):
        rng = np.random.default_rng(32)
        x = rng.normal(size=(400, 3))
        y = (rng.random(400) < sigmoid(x @ np.array([0.5, -1.0, 0.2]))).astype(float)
        fit = fit_logistic(y, x)
        assert fit.converged
        assert fit.score_max_norm(y, x) < 1e-6

    def test_analytic_gradient_matches_central_differences(self):
        rng = np.random.default_rng(33)
        n = 200
        X = rng.normal(size=(n, 2))
        y = (rng.random(n) < 0.5).astype(float)
        design = np.column_stack([np.ones(n), X])

        def ll(beta):
            eta = design @ beta
            return float((y * eta - np.logaddexp(0.0, eta)).sum())

        for _ in range(10):
            beta = rng.normal(scale=0.8, size=3)
            analytic = design.T @ (y - sigmoid(design @ beta))
            h = 1e-5
            numeric = np.array([
                (ll(beta + h * e) - ll(beta - h * e)) / (2 * h)
                for e in np.eye(3)
            ])
            assert np.abs(analytic - numeric).max() < 1e-4

    def test_mcfadden_identity(self):
        rng = np.random.default_rng(34)
        x = rng.normal(size=300)
        y = (rng.random(300) < sigmoid(0.8 * x)).astype(float)
        fit = fit_logistic(y, x)
        assert fit.pseudo_r2 == pytest.approx(
            1.0 - fit.log_likelihood / fit.null_log_likelihood, abs=1e-12)
        assert 0.0 <= fit.pseudo_r2 < 1.0

    def test_perfect_separation_flagged(self):
        x = np.concatenate([np.linspace(-3, -1, 20), np.linspace(1, 3, 20)])
        y = (x > 0).astype(float)
        fit = fit_logistic(y, x)
        assert fit.separated and not fit.converged

    def test_rank_deficiency_names_columns(self):
        rng = np.random.default_rng(35)
        x = rng.normal(size=100)
        X = np.column_stack([x, x])
        y = (rng.random(100) < 0.5).astype(float)
        with pytest.raises(RankDeficientError) as err:
            fit_logistic(y, X, ["dup_a", "dup_b"])
        assert set(err.value.columns) & {"dup_a", "dup_b"}

    def test_constant_response_rejected(self):
        with pytest.raises(ConfigError):
            fit_logistic(np.ones(10), np.empty((10, 0)))


class TestBalancedEnsemble:
    def test_already_balanced_has_zero_sd(self):
        rng = np.random.default_rng(41)
        n = 120
        x = rng.normal(size=n)
        y = np.array([1.0] * 60 + [0.0] * 60)
        ens = balanced_ensemble(y, x, n_reps=20, seed=1)
        assert ens.n_reps == 20
        assert np.all(ens.coef_sd == 0.0)

    def test_planted_sign_recovery(self):
        rng = np.random.default_rng(42)
        n = 600
        x = rng.normal(size=n)
        y = (rng.random(n) < sigmoid(-1.2 + 1.8 * x)).astype(float)
        ens = balanced_ensemble(y, x, n_reps=200, seed=2, columns=["x"])
        signs = np.sign(ens.coefs[:, 1])
        assert (signs > 0).mean() >= 0.95

    def test_minority_too_small_raises(self):
        y = np.array([1.0] * 2 + [0.0] * 50)
        X = np.random.default_rng(43).normal(size=(52, 3))
        with pytest.raises(ConfigError):
            balanced_ensemble(y, X, n_reps=5, seed=3)

    def test_deterministic_summary(self):
        rng = np.random.default_rng(44)
        n = 300
        x = rng.normal(size=n)
        y = (rng.random(n) < sigmoid(-0.8 + x)).astype(float)
        a = balanced_ensemble(y, x, n_reps=50, seed=9)
        b = balanced_ensemble(y, x, n_reps=50, seed=9)
        assert np.array_equal(a.coefs, b.coefs)
        assert a.mean_log_likelihood == b.mean_log_likelihood

    def test_report_fields_present(self):
        # the ensemble summary must expose mean log-likelihood and
        # mean/max pseudo-R^2 for downstream reports
        rng = np.random.default_rng(45)
        x = rng.normal(size=200)
        y = (rng.random(200) < sigmoid(x)).astype(float)
        ens = balanced_ensemble(y, x, n_reps=10, seed=4)
        assert ens.mean_log_likelihood < 0
        assert 0 <= ens.mean_pseudo_r2 <= ens.max_pseudo_r2 < 1
        assert ens.neg_log_p().shape == ens.coefs.shape


class TestFitLinear:
    def test_exact_line(self):
        x = np.arange(10.0)
        fit = fit_linear(2.0 * x, x, columns=["x"])
        assert fit.coef[1] == pytest.approx(2.0, abs=1e-10)
        assert fit.coef[0] == pytest.approx(0.0, abs=1e-9)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)

    def test_independent_noise_has_null_coefficients(self):
        rng = np.random.default_rng(51)
        n, p = 500, 3
        X = rng.normal(size=(n, p))
        y = rng.normal(size=n)
        fit = fit_linear(y, X)
        for j in range(1, p + 1):
            assert abs(fit.coef[j]) < 3 * fit.se[j]
        assert fit.r2 < 0.05
        assert fit.adj_r2 <= fit.r2

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(52)
        for _ in range(30):
            n = int(rng.integers(10, 50))
            p = int(rng.integers(1, min(6, n - 2)))
            X = rng.normal(size=(n, p))
            y = rng.normal(size=n)
            fit = fit_linear(y, X)
            D = np.column_stack([np.ones(n), X])
            beta = np.linalg.solve(D.T @ D, D.T @ y)
            assert np.abs(fit.coef - beta).max() < 1e-8
            resid = y - D @ beta
            sig2 = resid @ resid / (n - p - 1)
            se = np.sqrt(np.diag(sig2 * np.linalg.inv(D.T @ D)))
            assert np.abs(fit.se - se).max() < 1e-8

    def test_controls_reported_separately(self):
        rng = np.random.default_rng(53)
        n = 80
        X = rng.normal(size=(n, 2))
        C = rng.normal(size=(n, 1))
        y = X @ np.array([1.0, -0.5]) + 0.3 * C[:, 0] + rng.normal(size=n)
        fit = fit_linear(y, X, C, ["a", "b"], ["ctl"])
        assert fit.covariate_columns == ["a", "b"]
        assert fit.control_columns == ["ctl"]
        assert fit.columns == ["intercept", "a", "b", "ctl"]
        assert fit.f_df == (3, n - 4)

    def test_rank_deficiency_names_columns(self):
        rng = np.random.default_rng(54)
        x = rng.normal(size=60)
        with pytest.raises(RankDeficientError) as err:
            fit_linear(rng.normal(size=60), np.column_stack([x, 2 * x]), columns=["a", "twice_a"])
        assert err.value.columns

    def test_too_few_rows_raises(self):
        with pytest.raises(ConfigError):
            fit_linear(np.arange(3.0), np.eye(3))


class TestFunctionOnScalar:
    def test_time_constant_response_gives_flat_curves(self):
        rng = np.random.default_rng(61)
        n, T = 60, 6
        x = rng.normal(size=n)
        Y = np.tile((2.0 + 3.0 * x)[:, None], (1, T))
        fit = fit_function_on_scalar(Y, x, ["x"], log_response=False)
        assert np.allclose(fit.coef[0], 2.0, atol=1e-9)
        assert np.allclose(fit.coef[1], 3.0, atol=1e-9)

    def test_pointwise_equivalence_exact(self):
        rng = np.random.default_rng(62)
        n, T = 80, 5
        X = rng.normal(size=(n, 2))
        Y = np.abs(rng.normal(size=(n, T))) * 100
        fos = fit_function_on_scalar(Y, X, ["a", "b"])
        for t in range(T):
            scalar = fit_linear(np.log1p(Y[:, t]), X, columns=["a", "b"])
            assert np.array_equal(fos.coef[:, t], scalar.coef)
            assert np.array_equal(fos.se[:, t], scalar.se)

    def test_bands_are_1_96_se(self):
        rng = np.random.default_rng(63)
        Y = np.abs(rng.normal(size=(50, 4))) * 10
        x = rng.normal(size=50)
        fit = fit_function_on_scalar(Y, x)
        assert np.array_equal(fit.hi95, fit.coef + 1.96 * fit.se)
        assert np.array_equal(fit.lo95, fit.coef - 1.96 * fit.se)
        assert np.allclose(fit.band_halfwidth(), 1.96 * fit.se)

    def test_planted_time_varying_coefficient(self):
        rng = np.random.default_rng(64)
        n, W = 400, 10
        x = rng.normal(size=n)
        T = W + 1
        truth = np.array([t / W for t in range(T)])
        Y = truth[None, :] * x[:, None] + 0.1 * rng.normal(size=(n, T))
        fit = fit_function_on_scalar(Y, x, ["x"], log_response=False)
        for t in range(T):
            assert abs(fit.coef[1, t] - truth[t]) < 3 * fit.se[1, t]


class TestSelectModel:
    def _planted(self, seed=71, n=400):
        rng = np.random.default_rng(seed)
        signal = rng.normal(size=n)
        noise1 = rng.normal(size=n)
        noise2 = rng.normal(size=n)
        y = 2.0 * signal + rng.normal(size=n)
        fm = fm_from(np.column_stack([signal, noise1, noise2]), ["signal", "noise1", "noise2"])
        return y, fm

    def test_single_config_trivially_selected(self):
        y, fm = self._planted()
        sel = select_model("linear", y, fm, [("signal",)])
        assert sel.best.covariates == ("signal",)
        assert len(sel.results) == 1

    def test_true_covariate_outranks_noise_swap(self):
        y, fm = self._planted()
        sel = select_model("linear", y, fm, [("noise1",), ("signal",), ("noise2",)])
        assert sel.best.covariates == ("signal",)

    def test_all_configs_fit_and_logged(self):
        y, fm = self._planted()
        configs = [("signal",), ("noise1",), ("noise2",), ("signal", "noise1")]
        sel = select_model("linear", y, fm, configs)
        assert len(sel.results) == 4
        assert not sel.truncated
        assert {r.config_id for r in sel.results} == {0, 1, 2, 3}

    def test_limit_truncates_and_reports(self):
        y, fm = self._planted()
        sel = select_model("linear", y, fm, [("signal",), ("noise1",), ("noise2",)], limit=2)
        assert sel.truncated
        assert len(sel.results) == 2

    def test_failures_recorded_not_fatal(self):
        y, fm = self._planted()
        sel = select_model("linear", y, fm, [("signal", "signal"), ("noise1",)])
        assert sel.n_failed == 1
        assert sel.results[0].error is not None
        assert sel.best.covariates == ("noise1",)

    def test_logistic_ranks_by_log_likelihood(self):
        rng = np.random.default_rng(72)
        n = 500
        signal = rng.normal(size=n)
        noise = rng.normal(size=n)
        y = (rng.random(n) < sigmoid(1.5 * signal)).astype(float)
        fm = fm_from(np.column_stack([signal, noise]), ["signal", "noise"])
        sel = select_model("logistic", y, fm, [("noise",), ("signal",)])
        assert sel.best.covariates == ("signal",)
        assert sel.best.score == sel.best.fit.log_likelihood

    def test_rescaling_leaves_ranking_unchanged(self):
        y, fm = self._planted(seed=73)
        configs = [("signal",), ("noise1",), ("noise2",)]
        before = [r.covariates for r in select_model("linear", y, fm, configs).ranked]
        scaled = fm_from(fm.data * np.array([100.0, 1.0, 1.0]), fm.columns)
        after = [r.covariates for r in select_model("linear", y, scaled, configs).ranked]
        assert before == after


def _synth_pipeline_data(seed=81, n_firms=150):
    cfg = SyntheticConfig(n_firms=n_firms, n_investors=60, n_subsectors=3,
                          year_range=(2000, 2020), high_regime_fraction=0.25, seed=seed)
    ds = generate_synthetic(cfg)
    ts = build_trajectories(ds.deals, ds.firms, 10)
    firms = sorted({t.firm_id for t in ts.trajectories})
    by_firm = {t.firm_id: t for t in ts.trajectories}
    rng = np.random.default_rng(seed + 1)
    n_inv = np.array([np.log1p(len({d.investor_id for d in ds.deals if d.firm_id == f}))
                      for f in firms])
    noise = rng.normal(size=len(firms))
    data = np.column_stack([(n_inv - n_inv.mean()) / n_inv.std(ddof=1), noise])
    fm = FeatureMatrix(firms, ["log_n_investors", "noise"], data)
    first_amounts = {}
    for f in firms:
        f_deals = [d for d in ds.deals if d.firm_id == f]
        first_date = min(d.date for d in f_deals)
        first_round_id = min(d.round_id for d in f_deals if d.date == first_date)
        first_amounts[f] = float(sum(d.amount for d in f_deals if d.round_id == first_round_id))
    subsectors = {f: ds.firms[f].subsector for f in firms}
    return ds, ts, fm, first_amounts, subsectors


class TestWindowSweep:
    def test_counts_non_increasing_and_rows_emitted(self):
        ds, ts, fm, first_amounts, subsectors = _synth_pipeline_data()
        data = PipelineData(ds.deals, ds.firms, fm, first_amounts, subsectors,
                            kmeans_inits=5, kmeans_seed=3)
        res = window_sweep(data, ("log_n_investors",), list(range(5, 13)), "linear_agg")
        counts = [res.firm_counts[w] for w in range(5, 13)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        assert res.warnings == []
        assert {r.window for r in res.rows} == set(range(5, 13))
        for r in res.rows:
            assert r.lo95 == pytest.approx(r.estimate - 1.96 * r.se)

    def test_stable_coefficient_for_stationary_process(self):
        ds, ts, fm, first_amounts, subsectors = _synth_pipeline_data(seed=82)
        data = PipelineData(ds.deals, ds.firms, fm, first_amounts, subsectors)
        res = window_sweep(data, ("log_n_investors",), [8, 9, 10], "linear_agg")
        rows = [r for r in res.rows if r.term == "log_n_investors"]
        assert len(rows) == 3
        # planted positive effect is significant and stable across windows
        for r in rows:
            assert r.lo95 > 0
        ests = [r.estimate for r in rows]
        for r in rows:
            assert r.lo95 <= np.mean(ests) <= r.hi95

    def test_empty_range_gives_empty_table(self):
        ds, ts, fm, first_amounts, subsectors = _synth_pipeline_data(seed=83, n_firms=60)
        data = PipelineData(ds.deals, ds.firms, fm, first_amounts, subsectors)
        res = window_sweep(data, ("log_n_investors",), [], "linear_agg")
        assert res.rows == [] and res.firm_counts == {}

    def test_functional_kind_emits_grid_rows(self):
        ds, ts, fm, first_amounts, subsectors = _synth_pipeline_data(seed=84, n_firms=80)
        data = PipelineData(ds.deals, ds.firms, fm, first_amounts, subsectors)
        res = window_sweep(data, ("log_n_investors",), [6], "functional")
        grid = {r.grid_t for r in res.rows}
        assert grid == set(range(7))


class TestPerturbationSweep:
    def test_singleton_groups_sd_zero(self):
        rng = np.random.default_rng(91)
        x = rng.normal(size=200)
        z = rng.normal(size=200)
        y = x + 0.5 * z + rng.normal(size=200)
        fm = fm_from(np.column_stack([x, z]), ["x", "z"])
        sel = select_model("linear", y, fm, [("x", "z")])
        res = perturbation_sweep({"x": 1, "z": 2}, sel)
        assert [g.n_configs for g in res.groups] == [1, 1]
        assert all(g.sd == 0.0 for g in res.groups)

    def test_sign_flipped_pair_is_bimodal(self):
        rng = np.random.default_rng(92)
        x = rng.normal(size=300)
        z = rng.normal(size=300)
        y = 2.0 * x + rng.normal(size=300) * 0.1
        fm = fm_from(np.column_stack([x, -x, z]), ["x", "neg_x", "z"])
        groups = {"x": 1, "neg_x": 1, "z": 2}
        sel = select_model("linear", y, fm, [("x", "z"), ("neg_x", "z")])
        res = perturbation_sweep(groups, sel)
        g1 = [v for grp, _, _, v in res.samples if grp == 1]
        assert max(g1) > 1.5 and min(g1) < -1.5  # one mode each side of zero

    def test_planted_strong_group_mean_exceeds_sd(self):
        rng = np.random.default_rng(93)
        n = 400
        strong_a = rng.normal(size=n)
        strong_b = strong_a + 0.05 * rng.normal(size=n)
        weak = rng.normal(size=n)
        y = 1.5 * strong_a + rng.normal(size=n)
        fm = fm_from(np.column_stack([strong_a, strong_b, weak]), ["sa", "sb", "w"])
        groups = {"sa": 1, "sb": 1, "w": 2}
        sel = select_model("linear", y, fm, [("sa", "w"), ("sb", "w")])
        res = perturbation_sweep(groups, sel)
        g1 = next(g for g in res.groups if g.group == 1)
        assert g1.mean > g1.sd > 0


class TestConfusion:
    def test_worked_example_cells(self):
        rep = confusion_metrics(294, 664, 225, 1889)
        assert rep.tp + rep.fn + rep.fp + rep.tn == 3072
        assert round(rep.accuracy, 2) == 0.71
        assert round(rep.precision, 2) == 0.57
        assert round(rep.recall, 2) == 0.31
        assert rep.accuracy == pytest.approx(0.7106, abs=5e-5)
        assert rep.precision == pytest.approx(0.5665, abs=5e-5)
        assert rep.recall == pytest.approx(0.3069, abs=5e-5)

    def test_perfect_agreement(self):
        assert confusion_metrics(10, 0, 0, 20).accuracy == 1.0

    def test_all_low_recall_zero(self):
        rep = confusion_metrics(0, 7, 0, 13)
        assert rep.recall == 0.0 and rep.precision == 0.0

    def test_window_logic(self):
        from datetime import date as Date
        meta = {
            "hit": FirmMeta("hit", "bio", "US", "IPO", Date(2008, 1, 1)),
            "late": FirmMeta("late", "bio", "US", "IPO", Date(2019, 1, 1)),
            "alive": FirmMeta("alive", "bio", "US", "ACTIVE", None),
        }
        regimes = {"hit": HIGH, "late": HIGH, "alive": LOW}
        first = {"hit": 2000, "late": 2000, "alive": 2000}
        rep = confusion_vs_standard(regimes, meta, first, 10)
        # hit: exit within 8y -> TP; late: exit after 19y -> FP; alive: TN
        assert (rep.tp, rep.fn, rep.fp, rep.tn) == (1, 0, 1, 1)

    def test_accepts_cluster_assignment(self):
        ca = ClusterAssignment(10, "log1p", {"a": HIGH}, {}, {}, {})
        meta = {"a": FirmMeta("a")}
        rep = confusion_vs_standard(ca, meta, {"a": 2000}, 10)
        assert (rep.tp, rep.fn, rep.fp, rep.tn) == (0, 0, 1, 0)


class TestBuildControls:
    def test_reference_level_dropped(self):
        firms = ["a", "b", "c"]
        C, names = build_controls(firms, {"a": 10, "b": 20, "c": 30},
                                  {"a": "S1", "b": "S2", "c": "S3"})
        assert names == ["log_first_amount", "subsector_S2", "subsector_S3"]
        assert C.shape == (3, 3)
        assert C[0, 1] == 0.0 and C[1, 1] == 1.0

    def test_first_amount_optional(self):
        C, names = build_controls(["a", "b"], {"a": 1, "b": 2}, {"a": "X", "b": "Y"},
                                  include_first_amount=False)
        assert names == ["subsector_Y"]
