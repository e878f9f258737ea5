import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from modules.distributions import LabeledSet, MixtureSpec, UnlabeledSet, sample_labeled, sample_unlabeled
from modules.errors import InfeasibleError
from modules.estimators import LinearModel
from modules.experimentstate import XLawVariant
from modules.numerics import SeedSpec, mean_and_stderr, q_tail, unit

"""
* =============================================================== *
* Finite hypothesis classes and the margin-based machinery built  *
* on them: margin loss, clustering error, unsupervised ERM,       *
* Rademacher complexity, sublevel-set commonality and the         *
* constrained ERM that uses pseudo-label risk as weak supervision. *
* =============================================================== *

Because every class is finite, each argmin, supremum and sublevel set below is computed
by enumerating the members, and ties always go to the lowest member index.
"""

logger = logging.getLogger(__name__)


class FiniteClass:
    """Linear classifiers f_k(x) = scale_k * w_k^T x with unit directions w_k."""

    def __init__(self, directions, scales=None):
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        if directions.shape[0] < 1:
            raise ValueError("a class needs at least one member")
        self.directions = np.array([unit(w) for w in directions])
        self.scales = np.ones(len(directions)) if scales is None else np.asarray(scales, dtype=float)
        if self.scales.shape != (len(directions),) or np.any(self.scales <= 0):
            raise ValueError("need one positive scale per member")

    @staticmethod
    def of_angles(count: int, offset: float = 0.0):
        """count directions evenly spaced around the unit circle in p = 2."""
        angles = offset + 2.0 * math.pi * np.arange(count) / count
        return FiniteClass(np.column_stack([np.cos(angles), np.sin(angles)]))

    @staticmethod
    def of_random_dictionary(count: int, p: int, seed: SeedSpec, include=None):
        directions = seed.rng().standard_normal((count, p))
        if include is not None:
            directions[0] = include
        return FiniteClass(directions)

    @property
    def size(self) -> int:
        return len(self.scales)

    @property
    def members(self) -> List[LinearModel]:
        return [LinearModel(s * w) for w, s in zip(self.directions, self.scales)]

    def outputs(self, inputs: np.ndarray) -> np.ndarray:
        """(count, K) matrix of f_k(x_i)."""
        return (inputs @ self.directions.T) * self.scales

    def with_negations(self) -> "FiniteClass":
        return FiniteClass(np.vstack([self.directions, -self.directions]), np.concatenate([self.scales, self.scales]))

    def scaled(self, c: float) -> "FiniteClass":
        return FiniteClass(self.directions, c * self.scales)


@dataclass
class ErmResult:
    index: int
    model: LinearModel
    risk: float
    pseudo_risk: float = math.nan


@dataclass
class CommonalityReport:
    epsilon: float
    epsilon_tilde: float
    witness: int


@dataclass
class ClusteringBoundReport:
    trials: int
    violations: int
    violation_rate: float
    gamma: float
    delta: float
    min_error_2gamma: float
    confidence_term: float
    population_errors: List[float] = field(default_factory=list)
    complexity_terms: List[float] = field(default_factory=list)
    chosen: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TransferReport:
    xi_bar_ok: bool
    weak_close: bool
    strong_close: bool
    epsilon_tilde: float
    chosen: Optional[int] = None
    excess_loss: Optional[float] = None
    conclusion: Optional[bool] = None

    @property
    def premises_hold(self) -> bool:
        return self.xi_bar_ok and self.weak_close and self.strong_close

    def to_dict(self) -> dict:
        record = asdict(self)
        record["premises_hold"] = self.premises_hold
        return record


@dataclass
class PopulationLosses:
    label: np.ndarray
    pseudo: np.ndarray
    label_stderr: np.ndarray
    pseudo_stderr: np.ndarray


def margin_loss(x, gamma: float):
    """1 on [0, gamma], linear down to 0 on [gamma, 2 gamma], 0 beyond."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("the margin loss is defined on [0, inf)")
    result = np.clip(2.0 - x / gamma, 0.0, 1.0)
    return float(result) if result.ndim == 0 else result


def ramp_loss(margins):
    """min(1, max(0, 1 - m)): bounded in [0, 1] and 1-Lipschitz."""
    return np.clip(1.0 - np.asarray(margins, dtype=float), 0.0, 1.0)


def clustering_error(model: LinearModel, data: Union[UnlabeledSet, MixtureSpec], gamma: float) -> float:
    """P(|f(x)| <= gamma), as a sample fraction or, for a mixture, in closed form."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if isinstance(data, UnlabeledSet):
        return float(np.mean(np.abs(model.scores(data.inputs)) <= gamma))

    # f(x) = ||beta|| (a yX + sigma h) with a the alignment to mu
    a = model.correlation(data.mu)
    t = gamma / model.norm
    sigma = data.sigma
    if sigma == 0:
        return data.x_law.expect(lambda x: float(abs(a * x) <= t))
    if data.x_law.variant is XLawVariant.FOLDED_NORMAL:
        # yX is standard normal, so f / ||beta|| ~ N(0, a^2 + sigma^2)
        spread = math.sqrt(a * a + sigma * sigma)
        return 1.0 - 2.0 * q_tail(t / spread)

    def within(x):
        return q_tail((-t - a * x) / sigma) - q_tail((t - a * x) / sigma)

    return data.x_law.expect(within)


def unsup_erm(hypotheses: FiniteClass, data: UnlabeledSet, gamma: float) -> ErmResult:
    risks = margin_loss(np.abs(hypotheses.outputs(data.inputs)), gamma).mean(axis=0)
    index = int(np.argmin(risks))
    return ErmResult(index, hypotheses.members[index], float(risks[index]))


def empirical_rademacher(hypotheses: FiniteClass, data: UnlabeledSet, sign_draws: int, seed: SeedSpec):
    """(1/u) E sup_f sum_i eps_i f(x_i), averaged over sign_draws Rademacher vectors.
    Returns (estimate, std_error)."""
    if sign_draws < 1:
        raise ValueError("need at least one sign draw")
    outputs = hypotheses.outputs(data.inputs)
    signs = np.where(seed.rng().random((sign_draws, data.count)) < 0.5, -1.0, 1.0)
    suprema = (signs @ outputs).max(axis=1) / data.count
    return mean_and_stderr(suprema)


def clustering_bound_check(hypotheses: FiniteClass, spec: MixtureSpec, gamma: float, u: int, delta: float,
                           trials: int, seed: SeedSpec, sign_draws: int = 100) -> ClusteringBoundReport:
    """Frequency with which the clustering error of the margin ERM exceeds
    min E_2gamma + (2/gamma) R_u + 2 sqrt(log(2/delta) / u)."""
    if trials < 1:
        raise ValueError("need at least one trial")
    members = hypotheses.members
    min_error_2gamma = min(clustering_error(m, spec, 2.0 * gamma) for m in members)
    confidence = 2.0 * math.sqrt(math.log(2.0 / delta) / u)
    report = ClusteringBoundReport(trials, 0, 0.0, gamma, delta, min_error_2gamma, confidence)

    for t in range(trials):
        data = sample_unlabeled(spec, u, seed.child(t))
        erm = unsup_erm(hypotheses, data, gamma)
        complexity, _ = empirical_rademacher(hypotheses, data, sign_draws, seed.child(t).child(1))
        complexity_term = 2.0 / gamma * complexity
        error = clustering_error(erm.model, spec, gamma)
        if error > min_error_2gamma + complexity_term + confidence:
            report.violations += 1
        report.population_errors.append(error)
        report.complexity_terms.append(complexity_term)
        report.chosen.append(erm.index)
    report.violation_rate = report.violations / trials
    logger.info("clustering bound: %d of %d trials violated", report.violations, trials)
    return report


def _loss_vectors(*vectors):
    arrays = [np.asarray(v, dtype=float) for v in vectors]
    if any(a.shape != arrays[0].shape or a.ndim != 1 for a in arrays):
        raise ValueError("loss vectors must be one-dimensional with one entry per member")
    return arrays


def epsilon_tilde(hypotheses: Optional[FiniteClass], pop_loss: Sequence[float], pop_pseudo_loss: Sequence[float],
                  epsilon: float) -> CommonalityReport:
    """Smallest slack at which {L <= min L + epsilon} and {L~ <= min L~ + slack} intersect."""
    pop_loss, pop_pseudo_loss = _loss_vectors(pop_loss, pop_pseudo_loss)
    if hypotheses is not None and hypotheses.size != pop_loss.size:
        raise ValueError("loss vectors must have one entry per member")
    near_best = np.flatnonzero(pop_loss <= pop_loss.min() + epsilon)
    gaps = pop_pseudo_loss[near_best] - pop_pseudo_loss.min()
    best = int(np.argmin(gaps))
    return CommonalityReport(epsilon, float(gaps[best]), int(near_best[best]))


def _constrained_argmin(risks: np.ndarray, pseudo_risks: np.ndarray, xi: float) -> int:
    feasible = np.flatnonzero(pseudo_risks <= xi)
    if feasible.size == 0:
        raise InfeasibleError("no member has pseudo-label risk at most {:g} (minimum {:g})".format(
            xi, pseudo_risks.min()))
    return int(feasible[np.argmin(risks[feasible])])


def constrained_erm(hypotheses: FiniteClass, labeled: LabeledSet, unlabeled: UnlabeledSet, xi: float,
                    label_loss: Callable = ramp_loss, pseudo_loss: Callable = ramp_loss) -> ErmResult:
    """argmin L_S(f) subject to L~_U(f) <= xi. label_loss takes y f(x); pseudo_loss takes
    sgn(f(x)) f(x) = |f(x)|."""
    risks = label_loss(labeled.labels[:, None] * hypotheses.outputs(labeled.inputs)).mean(axis=0)
    pseudo_risks = pseudo_loss(np.abs(hypotheses.outputs(unlabeled.inputs))).mean(axis=0)
    index = _constrained_argmin(risks, pseudo_risks, xi)
    return ErmResult(index, hypotheses.members[index], float(risks[index]), float(pseudo_risks[index]))


def deterministic_transfer_check(hypotheses: Optional[FiniteClass], pop_loss, pop_pseudo_loss, emp_loss,
                                 emp_pseudo_loss, epsilon: float, delta: float, xi_bar: float) -> TransferReport:
    """Checks the two closeness premises by enumeration and, when they hold, solves the constrained
    empirical problem with xi = xi_bar + min L~ and tests L(f_hat) <= min L + 3 epsilon."""
    pop_loss, pop_pseudo_loss, emp_loss, emp_pseudo_loss = _loss_vectors(pop_loss, pop_pseudo_loss,
                                                                         emp_loss, emp_pseudo_loss)
    if hypotheses is not None and hypotheses.size != pop_loss.size:
        raise ValueError("loss vectors must have one entry per member")
    commonality = epsilon_tilde(hypotheses, pop_loss, pop_pseudo_loss, epsilon)
    pseudo_floor = pop_pseudo_loss.min()
    xi_bar_ok = xi_bar >= commonality.epsilon_tilde + delta
    weak_close = bool(np.max(np.abs(pop_pseudo_loss - emp_pseudo_loss)) <= delta)
    widened = pop_pseudo_loss <= pseudo_floor + xi_bar + delta
    strong_close = bool(np.max(np.abs(pop_loss - emp_loss)[widened]) <= epsilon)
    report = TransferReport(bool(xi_bar_ok), weak_close, strong_close, commonality.epsilon_tilde)
    if not report.premises_hold:
        return report

    index = _constrained_argmin(emp_loss, emp_pseudo_loss, xi_bar + pseudo_floor)
    report.chosen = index
    report.excess_loss = float(pop_loss[index] - pop_loss.min())
    report.conclusion = report.excess_loss <= 3.0 * epsilon
    if not report.conclusion:
        logger.error("transfer conclusion failed with premises satisfied: excess %g > 3 * %g",
                     report.excess_loss, epsilon)
    return report


def random_transfer_case(count: int, seed: SeedSpec) -> dict:
    """A toy instance whose empirical losses stay within (epsilon, delta) of the population ones."""
    rng = seed.rng()
    epsilon = rng.uniform(0.01, 0.1)
    delta = rng.uniform(0.01, 0.1)
    pop_loss = rng.random(count)
    pop_pseudo_loss = rng.random(count)
    commonality = epsilon_tilde(None, pop_loss, pop_pseudo_loss, epsilon)
    return {
        "pop_loss": pop_loss,
        "pop_pseudo_loss": pop_pseudo_loss,
        "emp_loss": pop_loss + rng.uniform(-epsilon, epsilon, count),
        "emp_pseudo_loss": pop_pseudo_loss + rng.uniform(-delta, delta, count),
        "epsilon": epsilon,
        "delta": delta,
        "xi_bar": commonality.epsilon_tilde + delta + rng.uniform(0.0, 0.2),
    }


def transfer_pass_rate(cases: int, count: int, seed: SeedSpec) -> dict:
    premises = 0
    conclusions = 0
    failures = 0
    for i in range(cases):
        report = deterministic_transfer_check(None, **random_transfer_case(count, seed.child(i)))
        if report.premises_hold:
            premises += 1
            conclusions += int(report.conclusion)
            failures += int(not report.conclusion)
    return {"cases": cases, "premises_true": premises, "conclusions_true": conclusions,
            "premises_true_conclusion_false": failures,
            "pass_rate": conclusions / premises if premises else math.nan}


def population_losses(hypotheses: FiniteClass, spec: MixtureSpec, samples: int, seed: SeedSpec) -> PopulationLosses:
    """Monte-Carlo ramp loss on labels and on pseudo-labels for every member."""
    data = sample_labeled(spec, samples, seed)
    outputs = hypotheses.outputs(data.inputs)
    label = ramp_loss(data.labels[:, None] * outputs)
    pseudo = ramp_loss(np.abs(outputs))
    root = math.sqrt(samples)
    return PopulationLosses(label.mean(axis=0), pseudo.mean(axis=0),
                            label.std(axis=0, ddof=1) / root, pseudo.std(axis=0, ddof=1) / root)


def weak_supervision_trial(hypotheses: FiniteClass, spec: MixtureSpec, population: PopulationLosses, n: int, u: int,
                           epsilon: float, xi_bar: float, seed: SeedSpec) -> TransferReport:
    """Pseudo-label risk as weak supervision: constrain to L~_U <= xi_bar + min L~, then run labeled ERM.
    delta is the measured max |L~ - L~_U| of this draw, so the report says whether the draw met the premises."""
    labeled = sample_labeled(spec, n, seed.child(0))
    unlabeled = sample_unlabeled(spec, u, seed.child(1))
    outputs_labeled = hypotheses.outputs(labeled.inputs)
    emp_loss = ramp_loss(labeled.labels[:, None] * outputs_labeled).mean(axis=0)
    emp_pseudo_loss = ramp_loss(np.abs(hypotheses.outputs(unlabeled.inputs))).mean(axis=0)
    delta = float(np.max(np.abs(population.pseudo - emp_pseudo_loss)))
    return deterministic_transfer_check(hypotheses, population.label, population.pseudo, emp_loss, emp_pseudo_loss,
                                        epsilon, delta, xi_bar)


def two_cluster_set(u: int, seed: SeedSpec, gap: float = 3.0, width: float = 1.0, noise: float = 0.1) -> LabeledSet:
    """Classes split along the x-axis at +-width while every point sits at +-gap on the y-axis,
    so the widest empty band is horizontal and does not follow the labels."""
    rng = seed.rng()
    labels = np.where(rng.random(u) < 0.5, -1.0, 1.0)
    heights = np.where(rng.random(u) < 0.5, -gap, gap)
    inputs = np.column_stack([labels * width, heights]) + noise * rng.standard_normal((u, 2))
    return LabeledSet(inputs, labels)
