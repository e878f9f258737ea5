import json
import logging
import math
from dataclasses import MISSING, asdict, dataclass, fields
from pathlib import Path
from typing import List, Union

from modules.errors import ConfigError
from modules.experimentstate import ExperimentName

"""
* =============================================================== *
* This module contains everything needed to read, check and write *
* experiment configurations.                                      *
* =============================================================== *

HOW TO MAKE A NEW CONFIG
-------------------------
1.  Make a new JSON file according to the templates in assets/configs/. Name the file after
    the experiment so the command line finds it without --config.
    JSON files must contain the following fields:
        experiment          ->          one of gmm_sweep, iterate_compare, logistic_sweep, landscape,
                                        bounds_suite, gap_fresh_vs_supervised
        p                   ->          ambient dimension
        n_bar               ->          labeled samples per dimension (n = round(n_bar * p))
        u_bar_grid          ->          JSON array of unlabeled samples per dimension, ascending
        sigma               ->          noise level
        gamma_threshold     ->          acceptance threshold on |beta^T x| / ||beta||
        tau                 ->          number of self-training rounds
        trials              ->          Monte-Carlo trials per grid cell
        master_seed         ->          seed every trial stream is derived from
        output_path         ->          directory the CSV and JSON files are written to

    The remaining fields of ExperimentConfig are optional and fall back to their defaults.
    Unknown fields are rejected, so a typo never silently falls back to a default.

2.  Run it with
        python main.py <experiment> --config path/to/file.json

Refer to "Experiment Config Instructions.md" for what each experiment reads.
"""

logger = logging.getLogger(__name__)

CONFIG_DIRECTORY = Path(__file__).resolve().parent.parent / "assets" / "configs"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentName
    p: int
    n_bar: float
    u_bar_grid: List[float]
    sigma: float
    gamma_threshold: float
    tau: int
    trials: int
    master_seed: int
    output_path: str

    # optional
    mix_rho: float = 0.8
    constraint_xi: float = 0.3
    mc_samples: int = 100000
    grid_points: int = 401
    grid_limit: float = 3.0
    alpha_init: float = 0.6
    logistic_steps: int = 300
    bootstrap_resamples: int = 2000
    margin_gamma: float = 0.25
    bound_delta: float = 0.1
    bound_epsilon: float = 0.05
    classes: int = 36
    transfer_cases: int = 1000

    def validate(self) -> "ExperimentConfig":
        for name in ("p", "tau", "trials", "mc_samples", "grid_points", "logistic_steps",
                     "bootstrap_resamples", "classes", "transfer_cases"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(name, "must be a positive integer, got {!r}".format(value))
        for name in ("n_bar", "sigma", "grid_limit", "margin_gamma", "bound_delta", "bound_epsilon"):
            value = getattr(self, name)
            if not _is_number(value) or not value > 0:
                raise ConfigError(name, "must be a positive number, got {!r}".format(value))
        for name in ("gamma_threshold", "constraint_xi"):
            value = getattr(self, name)
            if not _is_number(value) or value < 0:
                raise ConfigError(name, "must be a non-negative number, got {!r}".format(value))
        if not _is_number(self.mix_rho) or not 0 <= self.mix_rho <= 1:
            raise ConfigError("mix_rho", "must lie in [0, 1]")
        if not _is_number(self.alpha_init) or not 0 < self.alpha_init < 1:
            raise ConfigError("alpha_init", "must lie in (0, 1)")
        if not self.u_bar_grid:
            raise ConfigError("u_bar_grid", "must not be empty")
        if any(not _is_number(u) or u <= 0 for u in self.u_bar_grid):
            raise ConfigError("u_bar_grid", "entries must be positive numbers")
        if any(b <= a for a, b in zip(self.u_bar_grid, self.u_bar_grid[1:])):
            raise ConfigError("u_bar_grid", "must be strictly ascending")
        if not isinstance(self.master_seed, int) or isinstance(self.master_seed, bool):
            raise ConfigError("master_seed", "must be an integer")
        if not isinstance(self.output_path, str) or not self.output_path:
            raise ConfigError("output_path", "must be a non-empty path")
        return self

    @property
    def n(self) -> int:
        return max(1, round(self.n_bar * self.p))

    def u_for(self, u_bar: float) -> int:
        return max(1, round(u_bar * self.p))


REQUIRED_FIELDS = [f.name for f in fields(ExperimentConfig) if f.default is MISSING and f.default_factory is MISSING]


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "a config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown field")
    for key in REQUIRED_FIELDS:
        if key not in data:
            raise ConfigError(key, "missing required field")

    values = dict(data)
    try:
        values["experiment"] = ExperimentName(data["experiment"])
    except ValueError:
        raise ConfigError("experiment", "unknown experiment {!r}".format(data["experiment"])) from None
    if not isinstance(data["u_bar_grid"], list):
        raise ConfigError("u_bar_grid", "must be a JSON array")
    values["u_bar_grid"] = list(data["u_bar_grid"])
    return ExperimentConfig(**values).validate()


def config_to_dict(cfg: ExperimentConfig) -> dict:
    data = asdict(cfg)
    data["experiment"] = cfg.experiment.value
    return data


def load_config(filepath: Union[str, Path]) -> ExperimentConfig:
    # loads the json file from the specified filepath
    try:
        with open(filepath) as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError("--config", "no such file {}".format(filepath)) from None
    except json.JSONDecodeError as e:
        raise ConfigError("--config", "invalid JSON in {}: {}".format(filepath, e)) from None
    cfg = config_from_dict(data)
    logger.debug("loaded %s config from %s", cfg.experiment.value, filepath)
    return cfg


def dump_config(cfg: ExperimentConfig, filepath: Union[str, Path]) -> Path:
    filepath = Path(filepath)
    with open(filepath, "w") as f:
        json.dump(config_to_dict(cfg), f, indent=4, sort_keys=True)
        f.write("\n")
    return filepath


def default_config_path(experiment: ExperimentName) -> Path:
    return CONFIG_DIRECTORY / "{}.json".format(experiment.value)
