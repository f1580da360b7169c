import json

import numpy as np
import pytest

from lgss.datagen import Dataset, GroundTruth, ScenarioConfig, generate_regression, rng_stream
from lgss.errors import ConfigError, DataError
from lgss.estimators import evaluate_loss, fit_reduced
from lgss.harness import (
    METHOD_NAMES,
    RESULT_COLUMNS,
    MethodSpec,
    aggregate_rows,
    compute_metrics,
    load_run_config,
    parse_methods,
    read_results_csv,
    run_external,
    run_scenario,
    write_results_csv,
)
from lgss.losses import SQUARED


def tiny_cfg(**kw):
    base = dict(p=15, n_train=40, n_sub=25, n_val=15, n_test=15, s0=3, snr=2.0, mu_beta=4, mu_x=-2, B=8, V=2,
                n_partitions=2, seed=7, name="tiny")
    base.update(kw)
    return ScenarioConfig(**base)


FAST = [{"name": m, "m_iter": 20} for m in METHOD_NAMES]


def truth_of(support):
    support = np.asarray(support)
    beta = np.zeros(20)
    beta[support] = 1.0
    return GroundTruth(support, beta, 1.0)


class TestMetrics:
    def test_example(self):
        # 1-based {1,2,3,8,9} against {1,...,5}
        m = compute_metrics([0, 1, 2, 7, 8], truth_of([0, 1, 2, 3, 4]), None, None, SQUARED)
        assert m["tp_count"] == 3
        assert m["precision"] == 0.6
        assert m["selected_count"] == 5

    def test_empty_selection(self):
        m = compute_metrics([], truth_of([0, 1]), None, None, SQUARED)
        assert m["selected_count"] == 0
        assert m["precision"] is None

    def test_no_truth(self):
        m = compute_metrics([1], None, None, None, SQUARED)
        assert m["tp_count"] is None and m["precision"] is None

    def test_test_loss(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30, 3))
        y = X[:, 0] + rng.normal(size=30)
        fit = fit_reduced(X[:20], y[:20], [0])
        test = Dataset(X[20:], y[20:])
        m = compute_metrics([0], None, fit, test, SQUARED)
        assert m["test_loss"] == evaluate_loss(fit, test.X, test.y)

    def test_true_support_beats_intercept(self):
        # SNR-1 draws at p=100, n=300; the pass band (>= 95 of 100) is the check's contract
        cfg = ScenarioConfig(p=100, n_train=300, n_sub=200, n_val=100, s0=5, snr=1, mu_beta=4, mu_x=-2)
        wins = 0
        for seed in range(100):
            data, truth = generate_regression(cfg, rng_stream(seed))
            tr, te = np.arange(400), np.arange(400, 500)
            true_fit = fit_reduced(data.X[tr], data.y[tr], truth.support)
            null_fit = fit_reduced(data.X[tr], data.y[tr], [])
            wins += evaluate_loss(true_fit, data.X[te], data.y[te]) <= evaluate_loss(null_fit, data.X[te], data.y[te])
        assert wins >= 95


class TestMethodSpec:
    def test_defaults(self):
        assert MethodSpec.default("pss_es").pss.q0 == 20
        assert MethodSpec.default("pss_fw").pss.q0 == 50
        assert MethodSpec.default("pss_es", "classification").pss.q0 == 15
        assert MethodSpec.default("lss").grid.q_values == tuple(range(1, 11))

    def test_parse_dict(self):
        m = MethodSpec.parse({"name": "pss_bw", "q0": 7, "kappa": 0.2})
        assert m.pss.q0 == 7 and m.pss.strategy == "backward" and m.boost.kappa == 0.2

    def test_roundtrip(self):
        for m in parse_methods(None, "regression"):
            assert MethodSpec.parse(m.to_dict()) == m

    @pytest.mark.parametrize("spec", ["lasso", {"name": "lss", "lambda": 1}, 5])
    def test_invalid(self, spec):
        with pytest.raises(ConfigError):
            MethodSpec.parse(spec)

    def test_duplicates(self):
        with pytest.raises(ConfigError):
            parse_methods(["lss", "lss"], "regression")


class TestAggregation:
    def rows(self):
        def row(rep, part, sel, tp, loss, status="ok"):
            prec = tp / sel if sel else None
            return dict(scenario="s", repetition=rep, partition=part, method="lss", selected_count=sel,
                        tp_count=tp, precision=prec, val_loss=None, test_loss=loss, pfer_bound=None, status=status)

        return [row(0, 0, 4, 2, 1.0), row(0, 1, 0, 0, 3.0), row(1, 0, 2, 2, 2.0), row(1, 1, 5, 1, 2.5)]

    def test_hand_computed(self):
        agg = aggregate_rows(self.rows())["lss"]
        # rep 0 precision: only 0.5 (empty model skipped); rep 1: (1 + 0.2) / 2
        assert agg["mean_precision"] == pytest.approx((0.5 + 0.6) / 2)
        assert agg["mean_test_loss"] == pytest.approx((2.0 + 2.25) / 2)
        assert agg["mean_selected_count"] == pytest.approx((2 + 3.5) / 2)
        assert agg["n_empty_models"] == 1
        assert agg["n_failed"] == 0
        assert agg["mean_pfer_bound"] is None

    def test_csv_roundtrip(self, tmp_path):
        rows = self.rows()
        write_results_csv(rows, tmp_path / "r.csv")
        assert read_results_csv(tmp_path / "r.csv") == rows

    def test_numpy_scalars_written_as_plain_floats(self, tmp_path):
        rows = self.rows()
        rows[0]["test_loss"] = np.float64(0.1)
        write_results_csv(rows, tmp_path / "r.csv")
        assert read_results_csv(tmp_path / "r.csv")[0]["test_loss"] == 0.1

    def test_missing_columns(self, tmp_path):
        (tmp_path / "r.csv").write_text("scenario,method\ns,lss\n")
        with pytest.raises(DataError):
            read_results_csv(tmp_path / "r.csv")


class TestRunScenario:
    def test_reference_row_accepted(self):
        cfg = ScenarioConfig(p=1000, n_train=300, n_sub=200, n_val=100, s0=5, snr=1, mu_beta=4, mu_x=-2, B=100)
        assert (cfg.p, cfg.n_train, cfg.n_sub, cfg.n_val, cfg.s0, cfg.snr, cfg.mu_beta, cfg.mu_x, cfg.B) == (
            1000, 300, 200, 100, 5, 1, 4, -2, 100)

    def test_rows_and_files(self, tmp_path):
        report = run_scenario(tiny_cfg(), FAST, tmp_path)
        assert len(report.rows) == 2 * 2 * 5
        header = (tmp_path / "results.csv").read_text().splitlines()[0]
        assert header == ",".join(RESULT_COLUMNS)
        for row in report.rows:
            assert row["status"] == "ok"
            if row["selected_count"]:
                assert row["precision"] == row["tp_count"] / row["selected_count"]
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert set(summary["aggregates"]) == set(METHOD_NAMES)

    def test_byte_identical_rerun(self, tmp_path):
        cfg = tiny_cfg(V=1, n_partitions=1)
        run_scenario(cfg, FAST, tmp_path / "a")
        run_scenario(cfg, FAST, tmp_path / "b")
        for name in ("results.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_report_closure(self, tmp_path):
        run_scenario(tiny_cfg(), FAST, tmp_path)
        summary = json.loads((tmp_path / "summary.json").read_text())["aggregates"]
        again = aggregate_rows(read_results_csv(tmp_path / "results.csv"))
        for method, entry in summary.items():
            for key, value in entry.items():
                if value is None:
                    assert again[method][key] is None
                else:
                    assert again[method][key] == pytest.approx(value, abs=1e-12)

    def test_methods_share_subsamples(self):
        report = run_scenario(tiny_cfg(V=1, n_partitions=1), [{"name": "lss", "m_iter": 20},
                                                              {"name": "pss_es", "m_iter": 20, "pi_thr": 1.0}])
        assert all(r["status"] == "ok" for r in report.rows)

    def test_failures_recorded_not_raised(self, monkeypatch):
        import lgss.harness as mod
        from lgss.errors import SelectionError

        def boom(*a, **k):
            raise SelectionError("no fittable candidate")

        monkeypatch.setattr(mod, "select_from_profile", boom)
        report = run_scenario(tiny_cfg(V=1, n_partitions=1), FAST[:2])
        raw, lss = report.rows
        assert raw["status"] == "ok"
        assert lss["status"] == "error: SelectionError: no fittable candidate"
        assert lss["selected_count"] is None
        assert report.aggregates["lss"]["n_failed"] == 1

    def test_classification_meta(self):
        cfg = tiny_cfg(task="classification", snr=None, V=2, n_partitions=1)
        report = run_scenario(cfg, [{"name": "raw_boost", "m_iter": 10}, {"name": "lss", "m_iter": 10}])
        assert len(report.meta["nsr_inverse"]) == 2
        assert report.meta["mean_nsr_inverse"] > 0

    def test_load_run_config(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({**tiny_cfg().to_dict(), "methods": ["lss", {"name": "pss_fw", "q0": 5}]}))
        cfg, methods = load_run_config(path)
        assert cfg == tiny_cfg()
        assert [m.name for m in methods] == ["lss", "pss_fw"]

    def test_bad_config(self, tmp_path):
        (tmp_path / "c.json").write_text("{not json")
        with pytest.raises(ConfigError):
            load_run_config(tmp_path / "c.json")


class TestExternal:
    def write(self, path, n=10, p=3, seed=0):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, p))
        y = X[:, 0] + rng.normal(scale=0.5, size=n)
        lines = [",".join([f"x{j}" for j in range(p)] + ["y"])]
        lines += [",".join(repr(float(v)) for v in [*X[i], y[i]]) for i in range(n)]
        path.write_text("\n".join(lines) + "\n")

    def test_tiny_raw_boost(self, tmp_path):
        self.write(tmp_path / "d.csv")
        report = run_external(tmp_path / "d.csv", methods=["raw_boost"], n_train=6, n_val=2, n_partitions=3,
                              B=5, out=tmp_path / "out")
        assert len(report.rows) == 3
        for row in report.rows:
            assert row["status"] == "ok"
            assert row["tp_count"] is None and row["precision"] is None
            assert row["test_loss"] is not None
        assert report.meta["external"]["n_test"] == 2

    def test_all_methods(self, tmp_path):
        self.write(tmp_path / "d.csv", n=40, p=8)
        report = run_external(tmp_path / "d.csv", methods=FAST, n_train=20, n_val=10, n_partitions=2, B=6)
        assert {r["method"] for r in report.rows} == set(METHOD_NAMES)
        assert all(r["status"] == "ok" for r in report.rows)

    def test_missing_response(self, tmp_path):
        (tmp_path / "d.csv").write_text("a,b\n1,2\n3,4\n")
        with pytest.raises(DataError, match="'target'"):
            run_external(tmp_path / "d.csv", response="target", n_train=1, n_val=1)

    def test_bad_sizes(self, tmp_path):
        self.write(tmp_path / "d.csv")
        with pytest.raises(ConfigError):
            run_external(tmp_path / "d.csv", n_train=8, n_val=2)

    def test_pool_matches_serial(self, tmp_path):
        self.write(tmp_path / "d.csv", n=30, p=5)
        kw = dict(methods=[{"name": "raw_boost", "m_iter": 20}, {"name": "lss", "m_iter": 20}], n_train=15,
                  n_val=8, n_partitions=3, B=5)
        a = run_external(tmp_path / "d.csv", out=tmp_path / "a", **kw)
        b = run_external(tmp_path / "d.csv", out=tmp_path / "b", n_jobs=2, **kw)
        assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()
        assert a.aggregates == b.aggregates
