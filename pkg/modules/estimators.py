import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import linalg, special

from modules.distributions import LabeledSet, MixtureSpec, UnlabeledSet, sample_unlabeled
from modules.errors import AllRejectedError, ConfigError, DegenerateModelError, IllPosedError
from modules.experimentstate import XLawVariant
from modules.numerics import SeedSpec, cot_from_correlation, correlation, gaussian_vector, hard_sign, q_tail, unit

"""
* =============================================================== *
* This module contains every learning procedure of the toolkit:   *
* the averaging estimator, thresholded pseudo-labelling, the      *
* fresh-batch and reused-batch self-training schedules, logistic  *
* self-training and the ridge / early-stopping pseudo-label fits. *
* =============================================================== *

REFIT FUNCTIONS
-------------------------
The iterative schedules take a refit function refit(model, batch, threshold) -> LinearModel.
    self_train_step         ->      default; mean of pseudo-label * x over accepted samples
    logistic_refit(cfg)     ->      logistic regression on the accepted pseudo-labelled samples
A refit function raises AllRejectedError when the threshold rejects the whole batch.
"""

logger = logging.getLogger(__name__)


@dataclass
class FitDiagnostics:
    converged: bool
    steps: int
    gradient_norm: float
    final_loss: float
    ridge_lambda: float
    separable_risk: bool = False

    @property
    def flagged(self) -> bool:
        return not self.converged or self.separable_risk


@dataclass(eq=False)
class LinearModel:
    beta: np.ndarray
    diagnostics: Optional[FitDiagnostics] = None

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        if self.beta.ndim != 1:
            raise ValueError("beta must be a vector")
        if not np.all(np.isfinite(self.beta)):
            raise DegenerateModelError("beta has non-finite entries")
        if not np.any(self.beta):
            raise DegenerateModelError("the zero vector is not a classifier")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.beta))

    def scores(self, inputs: np.ndarray) -> np.ndarray:
        return inputs @ self.beta

    def normalised_margins(self, inputs: np.ndarray) -> np.ndarray:
        return self.scores(inputs) / self.norm

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        return hard_sign(self.scores(inputs))

    def correlation(self, mu: np.ndarray) -> float:
        return correlation(self.beta, mu)

    def cotangent(self, mu: np.ndarray) -> float:
        return cot_from_correlation(self.correlation(mu))

    def scaled(self, c: float) -> "LinearModel":
        return LinearModel(c * self.beta)


@dataclass(eq=False)
class PseudoLabeledSet:
    inputs: np.ndarray
    pseudo_labels: np.ndarray
    accepted_count: int
    rejected_count: int

    def as_labeled(self) -> LabeledSet:
        return LabeledSet(self.inputs, self.pseudo_labels)


@dataclass(frozen=True)
class TrainConfig:
    gamma_threshold: float = 0.0
    ridge_lambda: Optional[float] = None
    step_size: Optional[float] = None
    max_steps: int = 300
    tolerance: float = 1e-6

    def validate(self) -> "TrainConfig":
        if self.gamma_threshold < 0:
            raise ConfigError("gamma_threshold", "must be non-negative")
        if self.ridge_lambda is not None and self.ridge_lambda < 0:
            raise ConfigError("ridge_lambda", "must be non-negative")
        if self.step_size is not None and self.step_size <= 0:
            raise ConfigError("step_size", "must be positive")
        if self.max_steps < 1:
            raise ConfigError("max_steps", "must be a positive integer")
        if self.tolerance <= 0:
            raise ConfigError("tolerance", "must be positive")
        return self


@dataclass
class RoundStats:
    round_index: int
    correlation: float
    cotangent: float
    accuracy: float
    accepted: int
    step_correlation: float
    flagged: bool = False


def averaging_fit(data: LabeledSet) -> LinearModel:
    """(1/n) sum y_i x_i"""
    if data.count < 1:
        raise ValueError("need at least one labeled sample")
    mean = data.labels @ data.inputs / data.count
    if not np.any(mean):
        raise DegenerateModelError("the class-signed mean is exactly zero")
    return LinearModel(mean)


def pseudo_label_select(model: LinearModel, data: UnlabeledSet, threshold: float) -> PseudoLabeledSet:
    if threshold < 0:
        raise ValueError("the acceptance threshold must be non-negative")
    margins = model.normalised_margins(data.inputs)
    accepted = np.abs(margins) >= threshold
    count = int(np.count_nonzero(accepted))
    return PseudoLabeledSet(data.inputs[accepted], hard_sign(margins[accepted]), count, data.count - count)


def _accepted_or_raise(model: LinearModel, data: UnlabeledSet, threshold: float) -> PseudoLabeledSet:
    selected = pseudo_label_select(model, data, threshold)
    if selected.accepted_count == 0:
        raise AllRejectedError(threshold)
    return selected


def self_train_step(model: LinearModel, data: UnlabeledSet, threshold: float) -> LinearModel:
    return averaging_fit(_accepted_or_raise(model, data, threshold).as_labeled())


def _trajectory_entry(round_index, previous, model, accepted, spec) -> RoundStats:
    step = correlation(previous.beta, model.beta)
    if spec is None:
        return RoundStats(round_index, math.nan, math.nan, math.nan, accepted, step)
    rho = model.correlation(spec.mu)
    flagged = model.diagnostics is not None and model.diagnostics.flagged
    return RoundStats(round_index, rho, cot_from_correlation(rho), mixture_accuracy(rho, spec),
                      accepted, step, flagged)


def _count_accepted(model: LinearModel, data: UnlabeledSet, threshold: float) -> int:
    return int(np.count_nonzero(np.abs(model.normalised_margins(data.inputs)) >= threshold))


def iterate_fresh(model0: LinearModel, spec: MixtureSpec, u_per_round: int, threshold: float, rounds: int,
                  seed: SeedSpec, refit: Callable = None) -> Tuple[LinearModel, List[RoundStats]]:
    """Fresh-ST: round i draws its own batch from seed.child(i)."""
    if rounds < 1 or u_per_round < 1:
        raise ValueError("need at least one round and one sample per round")
    refit = refit or self_train_step
    model = model0
    trajectory = []
    for i in range(1, rounds + 1):
        batch = sample_unlabeled(spec, u_per_round, seed.child(i))
        try:
            new_model = refit(model, batch, threshold)
        except AllRejectedError:
            raise AllRejectedError(threshold, round_index=i) from None
        trajectory.append(_trajectory_entry(i, model, new_model, _count_accepted(model, batch, threshold), spec))
        logger.debug("fresh round %d: correlation %.6f", i, trajectory[-1].correlation)
        model = new_model
    return model, trajectory


def iterate_reuse(model0: LinearModel, data: UnlabeledSet, threshold: float, rounds: int,
                  spec: MixtureSpec = None, refit: Callable = None) -> Tuple[LinearModel, List[RoundStats]]:
    """Iterative-ST: every round pseudo-labels the same batch again."""
    if rounds < 1:
        raise ValueError("need at least one round")
    refit = refit or self_train_step
    model = model0
    trajectory = []
    for i in range(1, rounds + 1):
        try:
            new_model = refit(model, data, threshold)
        except AllRejectedError:
            raise AllRejectedError(threshold, round_index=i) from None
        trajectory.append(_trajectory_entry(i, model, new_model, _count_accepted(model, data, threshold), spec))
        model = new_model
    return model, trajectory


def _logistic_loss(beta, inputs, labels, ridge_lambda):
    margins = labels * (inputs @ beta)
    return float(np.mean(np.logaddexp(0.0, -margins)) + ridge_lambda * beta @ beta)


def logistic_fit(data: PseudoLabeledSet, cfg: TrainConfig = None) -> LinearModel:
    """Full-batch gradient descent on mean log(1 + exp(-y beta^T x)) + lambda ||beta||^2, from beta = 0."""
    cfg = (cfg or TrainConfig()).validate()
    if data.accepted_count < 1:
        raise AllRejectedError(cfg.gamma_threshold)
    inputs, labels = data.inputs, data.pseudo_labels
    n = data.accepted_count
    ridge_lambda = cfg.ridge_lambda if cfg.ridge_lambda is not None else 1e-3 / n
    step_size = cfg.step_size
    if step_size is None:
        # 1/L for the smoothness constant of the objective
        smoothness = np.linalg.norm(inputs, 2) ** 2 / (4.0 * n) + 2.0 * ridge_lambda
        step_size = 1.0 / smoothness

    beta = np.zeros(inputs.shape[1])
    gradient_norm = math.inf
    steps = 0
    converged = False
    while steps < cfg.max_steps:
        margins = labels * (inputs @ beta)
        gradient = -(inputs.T @ (labels * special.expit(-margins))) / n + 2.0 * ridge_lambda * beta
        gradient_norm = float(np.linalg.norm(gradient))
        if gradient_norm <= cfg.tolerance:
            converged = True
            break
        beta = beta - step_size * gradient
        steps += 1
    loss = _logistic_loss(beta, inputs, labels, ridge_lambda)

    separable_risk = ridge_lambda == 0 and bool(np.all(labels * (inputs @ beta) > 0))
    if not converged:
        logger.warning("logistic fit stopped after %d steps with gradient norm %.3g", steps, gradient_norm)
    if separable_risk:
        logger.warning("unregularised logistic fit on separable pseudo-labels; the norm of beta diverges")
    diagnostics = FitDiagnostics(converged, steps, gradient_norm, loss, ridge_lambda, separable_risk)
    if not np.any(beta):
        raise DegenerateModelError("logistic fit stayed at beta = 0")
    return LinearModel(beta, diagnostics)


def logistic_refit(cfg: TrainConfig = None) -> Callable:
    cfg = cfg or TrainConfig()

    def refit(model: LinearModel, data: UnlabeledSet, threshold: float) -> LinearModel:
        return logistic_fit(_accepted_or_raise(model, data, threshold), cfg)

    return refit


def ridge_pseudo_fit(model_init: LinearModel, data: UnlabeledSet, threshold: float,
                     ridge_lambda: float) -> LinearModel:
    """Minimises (1/2) mean (y~ - beta^T x)^2 + (lambda/2) ||beta||^2 over the accepted samples, i.e.
    solves (X^T X / s + lambda I) beta = X^T y~ / s."""
    if ridge_lambda < 0:
        raise ValueError("lambda must be non-negative")
    selected = _accepted_or_raise(model_init, data, threshold)
    s = selected.accepted_count
    p = data.p
    if math.isinf(ridge_lambda):
        return self_train_step(model_init, data, threshold)
    if ridge_lambda == 0 and s < p:
        raise IllPosedError("{} accepted samples cannot determine {} weights without ridge".format(s, p))

    gram = selected.inputs.T @ selected.inputs / s + ridge_lambda * np.eye(p)
    target = selected.inputs.T @ selected.pseudo_labels / s
    try:
        factor = linalg.cho_factor(gram, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise IllPosedError("the accepted second-moment matrix is singular") from None
    return LinearModel(linalg.cho_solve(factor, target, check_finite=False))


def early_stop_fit(model_init: LinearModel, data: UnlabeledSet, threshold: float) -> LinearModel:
    """(1/u) sum 1(accepted) sign(beta_init^T x) x, a single gradient step from zero."""
    selected = _accepted_or_raise(model_init, data, threshold)
    total = selected.pseudo_labels @ selected.inputs / data.count
    if not np.any(total):
        raise DegenerateModelError("the early-stopped estimate is exactly zero")
    return LinearModel(total)


def accuracy_from_alignment(alpha: float, sigma: float) -> float:
    """P(sign(beta^T x) = y) on the Gaussian mixture for a model at correlation alpha to mu."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return _noiseless_accuracy(alpha)
    return 1.0 - q_tail(alpha / sigma)


def _noiseless_accuracy(alpha: float) -> float:
    # beta^T x = alpha y X with X > 0; a zero score is labelled +1, right half of the time
    if alpha == 0:
        return 0.5
    return 1.0 if alpha > 0 else 0.0


def mixture_accuracy(alpha: float, spec: MixtureSpec) -> float:
    if spec.sigma == 0:
        return _noiseless_accuracy(alpha)
    if spec.x_law.variant is XLawVariant.CONSTANT_ONE:
        return accuracy_from_alignment(alpha, spec.sigma)
    return spec.x_law.expect(lambda t: 1.0 - q_tail(alpha * t / spec.sigma))


def empirical_accuracy(model: LinearModel, data: LabeledSet) -> float:
    return float(np.mean(model.predict(data.inputs) == data.labels))


def construct_init(spec: MixtureSpec, alpha: float, seed: SeedSpec = None) -> LinearModel:
    """Unit-norm beta = alpha mu + sqrt(1 - alpha^2) v with v orthogonal to mu.
    v is random when a seed is given, otherwise the coordinate axis least aligned with mu."""
    if not -1.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [-1, 1]")
    if spec.p < 2:
        raise ValueError("an orthogonal direction needs p >= 2")
    if seed is None:
        raw = np.zeros(spec.p)
        raw[int(np.argmin(np.abs(spec.mu)))] = 1.0
    else:
        raw = gaussian_vector(spec.p, seed)
    across = unit(raw - (raw @ spec.mu) * spec.mu)
    return LinearModel(alpha * spec.mu + math.sqrt(1.0 - alpha * alpha) * across)
