import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import stats

from modules import __version__
from modules.bounds import (FiniteClass, clustering_bound_check, epsilon_tilde, population_losses,
                            transfer_pass_rate, weak_supervision_trial)
from modules.distributions import LabeledSet, MixtureSpec, XLaw, cached_labeled
from modules.errors import ConfigError
from modules.estimators import (LinearModel, PseudoLabeledSet, RoundStats, TrainConfig, averaging_fit,
                                construct_init, iterate_fresh, iterate_reuse, logistic_fit, logistic_refit,
                                mixture_accuracy)
from modules.experimentjson import ExperimentConfig, config_to_dict
from modules.experimentstate import ClassificationLoss, Estimator, ExperimentName, Metric, ScanKind
from modules.landscape import (RayScan, SemiSupSpec, default_alphas, gradient_norm_ray, scale_decay_curve,
                               semisup_ray, supervised_loss_ray, unsupervised_loss_ray)
from modules.numerics import SeedSpec, cot_from_correlation, mean_and_stderr
from modules.theory import accuracy_from_cot, iterate_prediction, supervised_cot

"""
* =============================================================== *
* This module contains all the experiments the command line can   *
* run. An experiment owns its config, does its work in run() and  *
* hands back a table of rows.                                     *
* =============================================================== *

EXPERIMENTS
-------------------------
All experiments must support the following methods:
    run()               ->      Runs every trial and returns the summary table as a DataFrame
    write_artifacts()   ->      Writes any files beyond the summary table into the output directory
                                and returns their paths. Most experiments have none.

Trials are independent. Trial t of grid cell k draws all of its randomness from
SeedSpec(master_seed, k * trials + t), and results come back in trial order, so the tables
do not depend on the number of worker threads.

EXPERIMENT MANAGER
-------------------------
The ExperimentManager picks the experiment class for cfg.experiment, runs it and writes
    <output_path>/<experiment>.csv      ->      the summary table
    <output_path>/<experiment>.json     ->      config, package version, columns and artifact names
With a cache directory every labeled set and reused batch is read from, or written to, the
binary sample cache, so an interrupted sweep can be rerun without sampling again.
"""

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"
ITERATIVE_ROUNDS = 20
FIXED_POINT_TOLERANCE = 1e-6
LOGISTIC_THRESHOLDS = (0.0, 0.5)
POPULATION_SAMPLES = 200000

CacheDir = Union[str, Path, None]

SWEEP_COLUMNS = ["experiment", "estimator", "u_bar", "tau", "gamma_threshold", "metric", "p", "n_bar", "sigma",
                 "trials", "empirical_mean", "empirical_stderr", "theory_value", "deviation", "acceptance",
                 "flagged"]
GAP_COLUMNS = SWEEP_COLUMNS[:-2] + ["ci_low", "ci_high", "flagged"]
LANDSCAPE_COLUMNS = ["scan", "threshold", "argmin_alpha", "min_value", "local_minima", "flagged_points",
                     "artifact"]
BOUNDS_COLUMNS = ["check", "statistic", "value"]


@dataclass
class SweepRow:
    experiment: str
    estimator: str
    u_bar: float
    tau: int
    gamma_threshold: float
    metric: str
    p: int
    n_bar: float
    sigma: float
    trials: int
    empirical_mean: float
    empirical_stderr: float
    theory_value: Optional[float] = None
    deviation: Optional[float] = None
    acceptance: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    flagged: bool = False

    def __post_init__(self):
        if self.theory_value is not None:
            self.deviation = self.empirical_mean - self.theory_value


def model_stats(model: LinearModel, spec: MixtureSpec, round_index: int = 0, accepted: int = 0) -> RoundStats:
    """RoundStats of a model that was not produced by a self-training round."""
    rho = model.correlation(spec.mu)
    flagged = model.diagnostics is not None and model.diagnostics.flagged
    return RoundStats(round_index, rho, cot_from_correlation(rho), mixture_accuracy(rho, spec), accepted,
                      math.nan, flagged)


def paired_gap(first: Sequence[float], second: Sequence[float], resamples: int, seed: SeedSpec):
    """Mean and standard error of first - second with a percentile bootstrap 95% interval.
    The interval is absent for fewer than two pairs."""
    differences = np.asarray(first, dtype=float) - np.asarray(second, dtype=float)
    mean, stderr = mean_and_stderr(differences)
    if differences.size < 2:
        return mean, stderr, None, None
    if np.all(differences == differences[0]):
        return mean, stderr, mean, mean
    result = stats.bootstrap((differences,), np.mean, n_resamples=resamples, confidence_level=0.95,
                             method="percentile", random_state=seed.rng())
    return mean, stderr, float(result.confidence_interval.low), float(result.confidence_interval.high)


class Experiment:
    """Represents one experiment of the command line"""
    name: ExperimentName = None
    columns: List[str] = SWEEP_COLUMNS

    def __init__(self, cfg: ExperimentConfig, threads: int = 1, cache_dir: Optional[Path] = None):
        if cfg.experiment is not self.name:
            raise ConfigError("experiment", "{} cannot run a {} config".format(type(self).__name__,
                                                                                cfg.experiment.value))
        if threads < 1:
            raise ConfigError("--threads", "must be a positive integer")
        self.cfg = cfg
        self.threads = threads
        self.cache_dir = cache_dir

    def run(self) -> pd.DataFrame:
        raise NotImplementedError

    def write_artifacts(self, out_dir: Path) -> List[Path]:
        return []

    def map_trials(self, trial: Callable[[SeedSpec], object], block: int = 0) -> list:
        """Runs trial on the streams of grid cell `block` and returns the results in trial order."""
        first = block * self.cfg.trials
        seeds = [SeedSpec(self.cfg.master_seed, first + t) for t in range(self.cfg.trials)]
        if self.threads == 1:
            return [trial(seed) for seed in seeds]
        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            return list(executor.map(trial, seeds))

    def mixture(self) -> MixtureSpec:
        return MixtureSpec.of_dimension(self.cfg.p, self.cfg.sigma)

    def initial_model(self, spec: MixtureSpec, seed: SeedSpec) -> LinearModel:
        return averaging_fit(self.labeled(spec, self.cfg.n, seed.child(0)))

    def labeled(self, spec: MixtureSpec, n: int, seed: SeedSpec) -> LabeledSet:
        return cached_labeled(spec, n, seed, self.cache_dir)

    def row(self, estimator: Estimator, u_bar: float, tau: int, metric: Metric, samples: Sequence[float],
            theory_value: float = None, threshold: float = None, **extra) -> SweepRow:
        cfg = self.cfg
        mean, stderr = mean_and_stderr(samples)
        return SweepRow(cfg.experiment.value, estimator.value, u_bar, tau,
                        cfg.gamma_threshold if threshold is None else threshold, metric.value, cfg.p, cfg.n_bar,
                        cfg.sigma, cfg.trials, mean, stderr, theory_value, **extra)

    def stats_rows(self, estimator: Estimator, u_bar: float, tau: int, entries: Sequence[RoundStats],
                   theory_cot: float = None, threshold: float = None, acceptance: float = None) -> List[SweepRow]:
        """An accuracy row and a co-tangent row for the same set of per-trial entries."""
        flagged = any(e.flagged for e in entries)
        theory_accuracy = None if theory_cot is None else accuracy_from_cot(theory_cot, self.cfg.sigma)
        return [self.row(estimator, u_bar, tau, Metric.ACCURACY, [e.accuracy for e in entries], theory_accuracy,
                         threshold, acceptance=acceptance, flagged=flagged),
                self.row(estimator, u_bar, tau, Metric.COTANGENT, [e.cotangent for e in entries], theory_cot,
                         threshold, acceptance=acceptance, flagged=flagged)]

    def frame(self, rows: List[SweepRow]) -> pd.DataFrame:
        return pd.DataFrame([vars(r) for r in rows], columns=self.columns)


class GmmSweep(Experiment):
    """Fresh-ST accuracy and co-tangent against the iterated co-tangent map"""
    name = ExperimentName.GMM_SWEEP

    def trial(self, spec: MixtureSpec, u: int, seed: SeedSpec) -> List[RoundStats]:
        _, trajectory = iterate_fresh(self.initial_model(spec, seed), spec, u, self.cfg.gamma_threshold,
                                      self.cfg.tau, seed.child(1))
        return trajectory

    def run(self) -> pd.DataFrame:
        cfg = self.cfg
        spec = self.mixture()
        rows = []
        for k, u_bar in enumerate(cfg.u_bar_grid):
            u = cfg.u_for(u_bar)
            trajectories = self.map_trials(partial(self.trial, spec, u), k)
            for tau in range(1, cfg.tau + 1):
                entries = [t[tau - 1] for t in trajectories]
                theory = iterate_prediction(cfg.n_bar, u_bar, cfg.sigma, cfg.gamma_threshold, tau)
                acceptance = float(np.mean([e.accepted for e in entries])) / u
                rows += self.stats_rows(Estimator.FRESH_ST, u_bar, tau, entries, theory, acceptance=acceptance)
            logger.debug("gmm sweep: u_bar %g done", u_bar)
        return self.frame(rows)


class IterateCompare(Experiment):
    """Initial model, supervised with u labels, Fresh-ST and Iterative-ST on the same trials"""
    name = ExperimentName.ITERATE_COMPARE

    def trial(self, spec: MixtureSpec, u: int, seed: SeedSpec) -> Dict[str, object]:
        cfg = self.cfg
        initial = self.initial_model(spec, seed)
        _, fresh = iterate_fresh(initial, spec, u, cfg.gamma_threshold, cfg.tau, seed.child(1))
        supervised = averaging_fit(self.labeled(spec, u, seed.child(2)))
        batch = self.labeled(spec, u, seed.child(3)).unlabeled()
        _, reuse = iterate_reuse(initial, batch, cfg.gamma_threshold, ITERATIVE_ROUNDS, spec)
        return {"initial": model_stats(initial, spec), "supervised": model_stats(supervised, spec),
                "fresh": fresh, "reuse": reuse,
                "fixed_point": float(reuse[-1].step_correlation > 1.0 - FIXED_POINT_TOLERANCE)}

    def run(self) -> pd.DataFrame:
        cfg = self.cfg
        spec = self.mixture()
        rows = []
        for k, u_bar in enumerate(cfg.u_bar_grid):
            results = self.map_trials(partial(self.trial, spec, cfg.u_for(u_bar)), k)
            rows += self.stats_rows(Estimator.INITIAL, u_bar, 0, [r["initial"] for r in results],
                                    supervised_cot(cfg.n_bar, cfg.sigma))
            rows += self.stats_rows(Estimator.SUPERVISED_U, u_bar, 0, [r["supervised"] for r in results],
                                    supervised_cot(u_bar, cfg.sigma))
            for tau in range(1, cfg.tau + 1):
                rows += self.stats_rows(Estimator.FRESH_ST, u_bar, tau, [r["fresh"][tau - 1] for r in results],
                                        iterate_prediction(cfg.n_bar, u_bar, cfg.sigma, cfg.gamma_threshold, tau))
            for tau in (1, ITERATIVE_ROUNDS):
                rows += self.stats_rows(Estimator.ITERATIVE_ST, u_bar, tau, [r["reuse"][tau - 1] for r in results])
            rows.append(self.row(Estimator.ITERATIVE_ST, u_bar, ITERATIVE_ROUNDS, Metric.FIXED_POINT,
                                 [r["fixed_point"] for r in results]))
        return self.frame(rows)


class LogisticSweep(Experiment):
    """Logistic self-training next to its averaging counterpart, fresh and reused batches"""
    name = ExperimentName.LOGISTIC_SWEEP

    def thresholds(self) -> List[float]:
        return sorted(set(LOGISTIC_THRESHOLDS) | {float(self.cfg.gamma_threshold)})

    def trial(self, spec: MixtureSpec, u: int, seed: SeedSpec) -> Dict[tuple, List[RoundStats]]:
        cfg = self.cfg
        initial = self.initial_model(spec, seed)
        labeled = self.labeled(spec, u, seed.child(2))
        batch = self.labeled(spec, u, seed.child(3)).unlabeled()
        train = TrainConfig(max_steps=cfg.logistic_steps)
        supervised_logistic = logistic_fit(PseudoLabeledSet(labeled.inputs, labeled.labels, u, 0), train)
        results = {(Estimator.SUPERVISED_U, None): [model_stats(averaging_fit(labeled), spec)],
                   (Estimator.SUPERVISED_U_LOGISTIC, None): [model_stats(supervised_logistic, spec)]}
        for threshold in self.thresholds():
            refit = logistic_refit(TrainConfig(gamma_threshold=threshold, max_steps=cfg.logistic_steps))
            # both schedules see the same batches so the comparison is paired
            results[(Estimator.FRESH_LOGISTIC, threshold)] = iterate_fresh(
                initial, spec, u, threshold, cfg.tau, seed.child(1), refit)[1]
            results[(Estimator.FRESH_AVERAGING, threshold)] = iterate_fresh(
                initial, spec, u, threshold, cfg.tau, seed.child(1))[1]
            results[(Estimator.REUSE_LOGISTIC, threshold)] = iterate_reuse(
                initial, batch, threshold, cfg.tau, spec, refit)[1]
            results[(Estimator.REUSE_AVERAGING, threshold)] = iterate_reuse(
                initial, batch, threshold, cfg.tau, spec)[1]
        return results

    def run(self) -> pd.DataFrame:
        cfg = self.cfg
        spec = self.mixture()
        rows = []
        for k, u_bar in enumerate(cfg.u_bar_grid):
            results = self.map_trials(partial(self.trial, spec, cfg.u_for(u_bar)), k)
            for (estimator, threshold), trajectory in results[0].items():
                for tau in range(1, len(trajectory) + 1):
                    entries = [r[(estimator, threshold)][tau - 1] for r in results]
                    theory = None
                    if estimator is Estimator.FRESH_AVERAGING:
                        theory = iterate_prediction(cfg.n_bar, u_bar, cfg.sigma, threshold, tau)
                    elif estimator is Estimator.SUPERVISED_U:
                        theory = supervised_cot(u_bar, cfg.sigma)
                    rows += self.stats_rows(estimator, u_bar, 0 if threshold is None else tau, entries, theory,
                                            0.0 if threshold is None else threshold)
            flagged = sum(r.flagged for r in rows if r.u_bar == u_bar)
            if flagged:
                logger.warning("logistic sweep: %d rows at u_bar %g carry flagged fits", flagged, u_bar)
        return self.frame(rows)


class GapFreshVsSupervised(Experiment):
    """Paired accuracy gap of Fresh-ST against supervised learning on u labels"""
    name = ExperimentName.GAP_FRESH_VS_SUPERVISED
    columns = GAP_COLUMNS

    def trial(self, spec: MixtureSpec, u: int, seed: SeedSpec):
        cfg = self.cfg
        _, fresh = iterate_fresh(self.initial_model(spec, seed), spec, u, cfg.gamma_threshold, cfg.tau,
                                 seed.child(1))
        supervised = averaging_fit(self.labeled(spec, u, seed.child(2)))
        return [e.accuracy for e in fresh], model_stats(supervised, spec).accuracy

    def bootstrap_seed(self, block: int, tau: int) -> SeedSpec:
        # past the last trial stream of the grid
        cfg = self.cfg
        return SeedSpec(cfg.master_seed, len(cfg.u_bar_grid) * cfg.trials + block * cfg.tau + tau - 1)

    def run(self) -> pd.DataFrame:
        cfg = self.cfg
        spec = self.mixture()
        rows = []
        for k, u_bar in enumerate(cfg.u_bar_grid):
            results = self.map_trials(partial(self.trial, spec, cfg.u_for(u_bar)), k)
            supervised = [r[1] for r in results]
            for tau in range(1, cfg.tau + 1):
                fresh = [r[0][tau - 1] for r in results]
                mean, stderr, low, high = paired_gap(fresh, supervised, cfg.bootstrap_resamples,
                                                     self.bootstrap_seed(k, tau))
                theory = (accuracy_from_cot(iterate_prediction(cfg.n_bar, u_bar, cfg.sigma, cfg.gamma_threshold,
                                                               tau), cfg.sigma)
                          - accuracy_from_cot(supervised_cot(u_bar, cfg.sigma), cfg.sigma))
                row = SweepRow(cfg.experiment.value, Estimator.GAP.value, u_bar, tau, cfg.gamma_threshold,
                               Metric.ACCURACY.value, cfg.p, cfg.n_bar, cfg.sigma, cfg.trials, mean, stderr, theory,
                               ci_low=low, ci_high=high)
                rows.append(row)
                if low is not None and low > 0:
                    logger.info("Fresh-ST(%d) beats supervised at u_bar %g: CI [%.4f, %.4f]", tau, u_bar, low, high)
        return self.frame(rows)


class Landscape(Experiment):
    """Loss scans along beta = alpha * mu for X = 1"""
    name = ExperimentName.LANDSCAPE
    columns = LANDSCAPE_COLUMNS

    def __init__(self, cfg: ExperimentConfig, threads: int = 1, cache_dir: Optional[Path] = None):
        super().__init__(cfg, threads, cache_dir)
        self.scans: Dict[str, RayScan] = {}

    def run(self) -> pd.DataFrame:
        cfg = self.cfg
        x_law = XLaw.of_constant_one()
        alphas = default_alphas(cfg.grid_points, cfg.grid_limit)
        # every sampled scan shares one stream, so they are evaluated on common draws
        seed = SeedSpec(cfg.master_seed, 0)
        semisup = SemiSupSpec(cfg.mix_rho, cfg.constraint_xi, cfg.gamma_threshold)
        self.scans = {
            "supervised": supervised_loss_ray(x_law, cfg.sigma, alphas),
            "unsupervised": unsupervised_loss_ray(x_law, cfg.sigma, cfg.gamma_threshold, alphas,
                                                  cfg.mc_samples, seed),
            "semisup_regularized": semisup_ray(semisup, x_law, cfg.sigma, alphas, cfg.mc_samples, seed),
            "semisup_constraint_indicator": semisup_ray(semisup, x_law, cfg.sigma, alphas, cfg.mc_samples, seed,
                                                        ScanKind.SEMISUP_CONSTRAINT_INDICATOR),
            "gradient_norm_supervised": gradient_norm_ray(ScanKind.SUPERVISED, x_law, cfg.sigma,
                                                          cfg.gamma_threshold, alphas, cfg.mc_samples, seed),
            "gradient_norm_unsupervised": gradient_norm_ray(ScanKind.UNSUPERVISED, x_law, cfg.sigma,
                                                            cfg.gamma_threshold, alphas, cfg.mc_samples, seed),
        }
        spec = MixtureSpec.of_dimension(cfg.p, cfg.sigma, x_law)
        model = construct_init(spec, cfg.alpha_init)
        scales = np.logspace(-1, 3, 41)
        for loss in ClassificationLoss:
            self.scans["scale_decay_" + loss.value] = scale_decay_curve(model, x_law, cfg.sigma, loss, scales,
                                                                        cfg.mc_samples, seed.child(1), spec.mu)

        rows = []
        for name, scan in self.scans.items():
            finite = np.where(scan.flagged | np.isnan(scan.values), np.inf, scan.values)
            rows.append({"scan": name, "threshold": cfg.gamma_threshold, "argmin_alpha": scan.argmin(),
                         "min_value": float(finite.min()),
                         "local_minima": ";".join("{:.6g}".format(a) for a in scan.local_minima()),
                         "flagged_points": int(scan.flagged.sum()), "artifact": self.artifact_name(name)})
        return pd.DataFrame(rows, columns=self.columns)

    def artifact_name(self, scan_name: str) -> str:
        return "{}_{}.csv".format(self.name.value, scan_name)

    def write_artifacts(self, out_dir: Path) -> List[Path]:
        return [scan.to_csv(out_dir / self.artifact_name(name)) for name, scan in self.scans.items()]


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    if isinstance(value, (float, np.floating)):
        return None if not math.isfinite(value) else float(value)
    return value


class BoundsSuite(Experiment):
    """Clustering bound, deterministic transfer and weak supervision checks in p = 2"""
    name = ExperimentName.BOUNDS_SUITE
    columns = BOUNDS_COLUMNS

    def __init__(self, cfg: ExperimentConfig, threads: int = 1, cache_dir: Optional[Path] = None):
        super().__init__(cfg, threads, cache_dir)
        self.report = {}

    def weak_trial(self, hypotheses, spec, population, u, xi_bar, seed: SeedSpec):
        return weak_supervision_trial(hypotheses, spec, population, self.cfg.n, u, self.cfg.bound_epsilon,
                                      xi_bar, seed)

    def run(self) -> pd.DataFrame:
        cfg = self.cfg
        spec = MixtureSpec.of_dimension(2, cfg.sigma)
        hypotheses = FiniteClass.of_angles(cfg.classes)
        u = cfg.u_for(cfg.u_bar_grid[0])

        clustering = clustering_bound_check(hypotheses, spec, cfg.margin_gamma, u, cfg.bound_delta, cfg.trials,
                                            SeedSpec(cfg.master_seed, 0))
        transfer = transfer_pass_rate(cfg.transfer_cases, cfg.classes, SeedSpec(cfg.master_seed, 1))
        population = population_losses(hypotheses, spec, POPULATION_SAMPLES, SeedSpec(cfg.master_seed, 2))
        commonality = epsilon_tilde(hypotheses, population.label, population.pseudo, cfg.bound_epsilon)
        xi_bar = commonality.epsilon_tilde + cfg.bound_delta
        weak = self.map_trials(partial(self.weak_trial, hypotheses, spec, population, u, xi_bar), 3)
        held = [r for r in weak if r.premises_hold]

        self.report = {
            "clustering_bound": clustering.to_dict(),
            "transfer": transfer,
            "commonality": {"epsilon": commonality.epsilon, "epsilon_tilde": commonality.epsilon_tilde,
                            "witness": commonality.witness, "xi_bar": xi_bar},
            "weak_supervision": [r.to_dict() for r in weak],
        }
        rows = [
            ("clustering_bound", "violation_rate", clustering.violation_rate),
            ("clustering_bound", "violations", clustering.violations),
            ("clustering_bound", "trials", clustering.trials),
            ("clustering_bound", "min_error_2gamma", clustering.min_error_2gamma),
            ("clustering_bound", "mean_population_error", float(np.mean(clustering.population_errors))),
            ("clustering_bound", "confidence_term", clustering.confidence_term),
            ("transfer", "pass_rate", transfer["pass_rate"]),
            ("transfer", "premises_true", transfer["premises_true"]),
            ("transfer", "premises_true_conclusion_false", transfer["premises_true_conclusion_false"]),
            ("commonality", "epsilon_tilde", commonality.epsilon_tilde),
            ("weak_supervision", "premises_rate", len(held) / len(weak)),
            ("weak_supervision", "conclusion_rate",
             sum(bool(r.conclusion) for r in held) / len(held) if held else math.nan),
        ]
        return pd.DataFrame(rows, columns=self.columns)

    def artifact_name(self) -> str:
        return "{}_report.json".format(self.name.value)

    def write_artifacts(self, out_dir: Path) -> List[Path]:
        path = out_dir / self.artifact_name()
        with open(path, "w") as f:
            json.dump(_json_safe(self.report), f, indent=4, sort_keys=True)
            f.write("\n")
        return [path]


class ExperimentManager:
    """Picks the experiment for a config, runs it and writes its files"""
    experiments = {cls.name: cls for cls in (GmmSweep, IterateCompare, LogisticSweep, GapFreshVsSupervised,
                                             Landscape, BoundsSuite)}

    def __init__(self, cfg: ExperimentConfig, threads: int = 1, cache_dir: CacheDir = None):
        self.cfg = cfg
        self.cache_dir = None if cache_dir is None else Path(cache_dir)
        self.experiment = self.experiments[cfg.experiment](cfg, threads, self.cache_dir)
        self.frame: Optional[pd.DataFrame] = None

    def run(self) -> List[Path]:
        cfg = self.cfg
        logger.info("running %s: %d trials, seed %d", cfg.experiment.value, cfg.trials, cfg.master_seed)
        if self.cache_dir is not None:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            logger.info("sample cache at %s", self.cache_dir)
        self.frame = self.experiment.run()

        out_dir = Path(cfg.output_path)
        out_dir.mkdir(parents=True, exist_ok=True)
        table = out_dir / "{}.csv".format(cfg.experiment.value)
        self.frame.to_csv(table, index=False, float_format=FLOAT_FORMAT)
        artifacts = self.experiment.write_artifacts(out_dir)
        sidecar = out_dir / "{}.json".format(cfg.experiment.value)
        with open(sidecar, "w") as f:
            json.dump({"experiment": cfg.experiment.value, "version": __version__, "config": config_to_dict(cfg),
                       "columns": list(self.frame.columns), "artifacts": [p.name for p in artifacts]},
                      f, indent=4, sort_keys=True)
            f.write("\n")

        paths = [table, sidecar] + artifacts
        for path in paths:
            logger.info("wrote %s", path)
        return paths


def _run(cfg: ExperimentConfig, expected: ExperimentName, threads: int, cache_dir: CacheDir) -> pd.DataFrame:
    if cfg.experiment is not expected:
        raise ConfigError("experiment", "expected {}, got {}".format(expected.value, cfg.experiment.value))
    manager = ExperimentManager(cfg, threads, cache_dir)
    manager.run()
    return manager.frame


def run_gmm_sweep(cfg: ExperimentConfig, threads: int = 1, cache_dir: CacheDir = None) -> pd.DataFrame:
    return _run(cfg, ExperimentName.GMM_SWEEP, threads, cache_dir)


def run_iterate_compare(cfg: ExperimentConfig, threads: int = 1, cache_dir: CacheDir = None) -> pd.DataFrame:
    return _run(cfg, ExperimentName.ITERATE_COMPARE, threads, cache_dir)


def run_logistic_sweep(cfg: ExperimentConfig, threads: int = 1, cache_dir: CacheDir = None) -> pd.DataFrame:
    return _run(cfg, ExperimentName.LOGISTIC_SWEEP, threads, cache_dir)


def run_gap_fresh_vs_supervised(cfg: ExperimentConfig, threads: int = 1, cache_dir: CacheDir = None) -> pd.DataFrame:
    return _run(cfg, ExperimentName.GAP_FRESH_VS_SUPERVISED, threads, cache_dir)


def run_landscape(cfg: ExperimentConfig, threads: int = 1, cache_dir: CacheDir = None) -> pd.DataFrame:
    return _run(cfg, ExperimentName.LANDSCAPE, threads, cache_dir)


def run_bounds_suite(cfg: ExperimentConfig, threads: int = 1, cache_dir: CacheDir = None) -> pd.DataFrame:
    return _run(cfg, ExperimentName.BOUNDS_SUITE, threads, cache_dir)


RUNNERS = {
    ExperimentName.GMM_SWEEP: run_gmm_sweep,
    ExperimentName.ITERATE_COMPARE: run_iterate_compare,
    ExperimentName.LOGISTIC_SWEEP: run_logistic_sweep,
    ExperimentName.GAP_FRESH_VS_SUPERVISED: run_gap_fresh_vs_supervised,
    ExperimentName.LANDSCAPE: run_landscape,
    ExperimentName.BOUNDS_SUITE: run_bounds_suite,
}
