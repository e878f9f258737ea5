import json

import numpy as np
import pandas as pd
import pytest

import main
from modules import __version__
from modules.errors import ConfigError
from modules.experimentjson import config_from_dict, dump_config
from modules.experiments import (BOUNDS_COLUMNS, GAP_COLUMNS, LANDSCAPE_COLUMNS, SWEEP_COLUMNS, ExperimentManager,
                                 GmmSweep, SweepRow, paired_gap, run_bounds_suite, run_gap_fresh_vs_supervised,
                                 run_gmm_sweep, run_iterate_compare, run_landscape, run_logistic_sweep)
from modules.numerics import SeedSpec


def small_config(tmp_path, experiment, **changes):
    data = {
        "experiment": experiment,
        "p": 20,
        "n_bar": 0.5,
        "u_bar_grid": [2, 5],
        "sigma": 0.75,
        "gamma_threshold": 0.5,
        "tau": 2,
        "trials": 3,
        "master_seed": 11,
        "output_path": str(tmp_path / "out"),
        "logistic_steps": 20,
        "bootstrap_resamples": 200,
    }
    data.update(changes)
    return config_from_dict(data)


def test_sweep_row_deviation():
    row = SweepRow("gmm_sweep", "fresh_st", 1.0, 1, 0.0, "accuracy", 10, 0.1, 0.5, 4, 0.8, 0.01, 0.75)
    assert row.deviation == pytest.approx(0.05)
    assert SweepRow("gmm_sweep", "fresh_st", 1.0, 1, 0.0, "accuracy", 10, 0.1, 0.5, 4, 0.8, 0.01).deviation is None


class TestGmmSweep:
    def test_table_and_sidecar(self, tmp_path):
        cfg = small_config(tmp_path, "gmm_sweep")
        frame = run_gmm_sweep(cfg)
        assert list(frame.columns) == SWEEP_COLUMNS
        # two grid points, two rounds, accuracy and co-tangent
        assert len(frame) == 8
        assert set(frame["metric"]) == {"accuracy", "cotangent"}
        assert np.allclose(frame["deviation"], frame["empirical_mean"] - frame["theory_value"])
        assert frame["acceptance"].between(0, 1).all()

        sidecar = json.loads((tmp_path / "out" / "gmm_sweep.json").read_text())
        assert sidecar["version"] == __version__
        assert sidecar["columns"] == SWEEP_COLUMNS
        assert sidecar["config"]["master_seed"] == 11
        assert pd.read_csv(tmp_path / "out" / "gmm_sweep.csv").shape == frame.shape

    def test_thread_count_does_not_change_output(self, tmp_path):
        one = small_config(tmp_path / "one", "gmm_sweep")
        many = small_config(tmp_path / "many", "gmm_sweep")
        run_gmm_sweep(one, threads=1)
        run_gmm_sweep(many, threads=4)
        assert ((tmp_path / "one" / "out" / "gmm_sweep.csv").read_bytes()
                == (tmp_path / "many" / "out" / "gmm_sweep.csv").read_bytes())

    def test_seed_changes_output(self, tmp_path):
        a = run_gmm_sweep(small_config(tmp_path / "a", "gmm_sweep"))
        b = run_gmm_sweep(small_config(tmp_path / "b", "gmm_sweep", master_seed=12))
        assert not a["empirical_mean"].equals(b["empirical_mean"])

    def test_wrong_experiment(self, tmp_path):
        with pytest.raises(ConfigError):
            run_gmm_sweep(small_config(tmp_path, "iterate_compare"))
        with pytest.raises(ConfigError):
            GmmSweep(small_config(tmp_path, "landscape"))


def test_iterate_compare_rows(tmp_path):
    frame = run_iterate_compare(small_config(tmp_path, "iterate_compare", gamma_threshold=0))
    estimators = set(frame["estimator"])
    assert estimators == {"initial", "supervised_u", "fresh_st", "iterative_st"}
    supervised = frame[(frame["estimator"] == "supervised_u") & (frame["metric"] == "cotangent")]
    assert np.allclose(supervised["theory_value"], np.sqrt(supervised["u_bar"]) / 0.75)
    fixed = frame[frame["metric"] == "fixed_point"]
    assert len(fixed) == 2
    assert fixed["empirical_mean"].between(0, 1).all()
    assert set(frame.loc[frame["estimator"] == "iterative_st", "tau"]) == {1, 20}


def test_logistic_sweep_rows(tmp_path):
    frame = run_logistic_sweep(small_config(tmp_path, "logistic_sweep"))
    assert {"fresh_logistic", "reuse_logistic", "fresh_averaging", "reuse_averaging", "supervised_u",
            "supervised_u_logistic"} == set(frame["estimator"])
    assert set(frame["gamma_threshold"]) == {0.0, 0.5}
    # 20 steps do not converge, which shows up in the table rather than as a failure
    assert frame.loc[frame["estimator"] == "fresh_logistic", "flagged"].any()
    assert frame.loc[frame["estimator"] == "fresh_averaging", "theory_value"].notna().all()


class TestGap:
    def test_rows_carry_bootstrap_interval(self, tmp_path):
        frame = run_gap_fresh_vs_supervised(small_config(tmp_path, "gap_fresh_vs_supervised"))
        assert list(frame.columns) == GAP_COLUMNS
        assert len(frame) == 4
        assert (frame["ci_low"] <= frame["empirical_mean"]).all()
        assert (frame["empirical_mean"] <= frame["ci_high"]).all()

    def test_antisymmetry(self):
        first = [0.9, 0.8, 0.85, 0.7]
        second = [0.75, 0.82, 0.8, 0.72]
        mean, stderr, low, high = paired_gap(first, second, 500, SeedSpec(3))
        mean_r, stderr_r, low_r, high_r = paired_gap(second, first, 500, SeedSpec(3))
        assert mean_r == pytest.approx(-mean)
        assert stderr_r == pytest.approx(stderr)
        assert low_r == pytest.approx(-high)
        assert high_r == pytest.approx(-low)

    def test_single_pair_has_no_interval(self):
        assert paired_gap([0.9], [0.8], 100, SeedSpec(3))[2:] == (None, None)


def test_landscape_writes_scans(tmp_path):
    cfg = small_config(tmp_path, "landscape", sigma=1.0, gamma_threshold=0, mc_samples=5000, grid_points=41)
    frame = run_landscape(cfg)
    assert list(frame.columns) == LANDSCAPE_COLUMNS
    assert {"supervised", "unsupervised", "semisup_regularized"} <= set(frame["scan"])
    for artifact in frame["artifact"]:
        scan = pd.read_csv(tmp_path / "out" / artifact)
        assert list(scan.columns) == ["alpha", "value", "std_error", "flagged"]
    supervised = frame.set_index("scan").loc["supervised"]
    assert supervised["argmin_alpha"] == pytest.approx(0.5, abs=0.15)


def test_bounds_suite_report(tmp_path):
    cfg = small_config(tmp_path, "bounds_suite", p=2, n_bar=25, u_bar_grid=[100], sigma=0.5, trials=2,
                       classes=12, transfer_cases=20)
    frame = run_bounds_suite(cfg)
    assert list(frame.columns) == BOUNDS_COLUMNS
    values = frame.set_index(["check", "statistic"])["value"]
    assert values[("clustering_bound", "trials")] == 2
    assert values[("transfer", "premises_true_conclusion_false")] == 0
    report = json.loads((tmp_path / "out" / "bounds_suite_report.json").read_text())
    assert set(report) == {"clustering_bound", "transfer", "commonality", "weak_supervision"}
    assert len(report["weak_supervision"]) == 2


def test_manager_returns_written_paths(tmp_path):
    paths = ExperimentManager(small_config(tmp_path, "gmm_sweep", u_bar_grid=[2], tau=1)).run()
    assert [p.name for p in paths] == ["gmm_sweep.csv", "gmm_sweep.json"]
    assert all(p.exists() for p in paths)


class TestSampleCache:
    def test_rerun_from_cache_writes_the_same_table(self, tmp_path):
        cache = tmp_path / "cache"
        run_iterate_compare(small_config(tmp_path / "plain", "iterate_compare"))
        run_iterate_compare(small_config(tmp_path / "first", "iterate_compare"), cache_dir=cache)
        written = sorted(cache.glob("*.bin"))
        assert written
        run_iterate_compare(small_config(tmp_path / "second", "iterate_compare"), cache_dir=str(cache))
        assert sorted(cache.glob("*.bin")) == written
        tables = [(tmp_path / name / "out" / "iterate_compare.csv").read_bytes()
                  for name in ("plain", "first", "second")]
        assert tables[0] == tables[1] == tables[2]

    def test_landscape_accepts_a_cache_dir(self, tmp_path):
        cfg = small_config(tmp_path, "landscape", sigma=1.0, gamma_threshold=0, mc_samples=5000, grid_points=41)
        assert len(run_landscape(cfg, cache_dir=tmp_path / "cache")) > 0
        assert (tmp_path / "cache").is_dir()

    def test_command_line_flag(self, tmp_path):
        cfg = str(dump_config(small_config(tmp_path, "gmm_sweep", u_bar_grid=[2], tau=1), tmp_path / "cfg.json"))
        assert main.main(["gmm_sweep", "--config", cfg, "--cache-dir", str(tmp_path / "cache")]) == 0
        assert list((tmp_path / "cache").glob("*.bin"))


class TestCommandLine:
    def config_file(self, tmp_path, **changes):
        return str(dump_config(small_config(tmp_path, "gmm_sweep", u_bar_grid=[2], tau=1, **changes),
                               tmp_path / "cfg.json"))

    def test_success(self, tmp_path):
        out = tmp_path / "cli"
        code = main.main(["gmm_sweep", "--config", self.config_file(tmp_path), "--out", str(out), "--trials", "2",
                          "--seed", "5", "--threads", "2"])
        assert code == 0
        sidecar = json.loads((out / "gmm_sweep.json").read_text())
        assert sidecar["config"]["trials"] == 2
        assert sidecar["config"]["master_seed"] == 5

    def test_invalid_config_exits_with_two(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"experiment": "gmm_sweep"}))
        assert main.main(["gmm_sweep", "--config", str(path)]) == 2
        assert main.main(["gmm_sweep", "--config", str(tmp_path / "absent.json")]) == 2

    def test_mismatched_subcommand_exits_with_two(self, tmp_path):
        assert main.main(["landscape", "--config", self.config_file(tmp_path)]) == 2

    def test_bad_override_exits_with_two(self, tmp_path):
        assert main.main(["gmm_sweep", "--config", self.config_file(tmp_path), "--trials", "0"]) == 2

    def test_runtime_failure_exits_with_three(self, tmp_path):
        # nothing passes a threshold of 100
        assert main.main(["gmm_sweep", "--config", self.config_file(tmp_path, gamma_threshold=100.0)]) == 3

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as info:
            main.main(["bayes_unsupervised"])
        assert info.value.code == 2
