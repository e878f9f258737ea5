import logging
import math
from dataclasses import dataclass

from scipy import optimize

from modules.distributions import XLaw
from modules.errors import DomainError, InvalidResolutionError
from modules.estimators import accuracy_from_alignment
from modules.numerics import gamma_norm_sq, normal_pdf, q_tail

"""
* =============================================================== *
* Closed-form predictions for the self-training estimators.       *
* Nothing in here draws random numbers; every function is a pure  *
* map from parameters to the value the tests and sweeps compare   *
* Monte-Carlo averages against.                                    *
* =============================================================== *

NOTATION
-------------------------
    alpha       ->      correlation of the initial model with mu
    x           ->      co-tangent of the initial model, x = alpha / sqrt(1 - alpha^2)
    threshold   ->      acceptance threshold Gamma on |beta^T x| / ||beta||
    u_bar       ->      unlabeled samples per dimension, u / p
    n_bar       ->      labeled samples per dimension, n / p
"""

logger = logging.getLogger(__name__)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class SelfTrainQuantities:
    gbar_plus: float
    gbar_minus: float
    lambda_: float
    rho: float
    nu: float


@dataclass(frozen=True)
class CotBounds:
    lower: float
    upper: float
    epsilon: float
    asymptotic: float
    limit: float = math.nan

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class MarginBound:
    bound: float
    condition_met: bool
    strong_bound: float
    vacuous: bool


def quantities(alpha: float, sigma: float, threshold: float) -> SelfTrainQuantities:
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1], got {!r}".format(alpha))
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    if threshold < 0:
        raise DomainError("the acceptance threshold must be non-negative")
    gbar_plus = (threshold - alpha) / sigma
    gbar_minus = (alpha + threshold) / sigma
    rho = q_tail(gbar_plus) + q_tail(gbar_minus)
    lambda_ = (normal_pdf(gbar_plus) + normal_pdf(gbar_minus)) / rho
    nu = q_tail(gbar_minus) / rho
    return SelfTrainQuantities(gbar_plus, gbar_minus, lambda_, rho, nu)


def cot_to_correlation(x: float) -> float:
    if math.isinf(x):
        return math.copysign(1.0, x)
    return x / math.sqrt(1.0 + x * x)


def _one_step(alpha: float, sigma: float, q: SelfTrainQuantities, noise_term: float) -> float:
    """(1 + sigma alpha Lambda - 2 nu) / (sigma sqrt((1 - alpha^2) Lambda^2 + noise_term))"""
    numerator = 1.0 + sigma * alpha * q.lambda_ - 2.0 * q.nu
    signal = (1.0 - alpha * alpha) * q.lambda_ ** 2
    return numerator / (sigma * math.sqrt(signal + noise_term))


def cot_update(x: float, sigma: float, threshold: float, u_bar: float) -> float:
    """The co-tangent after one self-training step on u_bar * p fresh samples, F_u_bar(x)."""
    if x <= 0:
        raise DomainError("the initial co-tangent must be positive")
    if u_bar <= 0:
        raise DomainError("u_bar must be positive")
    alpha = cot_to_correlation(x)
    q = quantities(alpha, sigma, threshold)
    return _one_step(alpha, sigma, q, 1.0 / (u_bar * q.rho))


def cot_limit(x: float, sigma: float, threshold: float) -> float:
    return cot_update(x, sigma, threshold, math.inf)


def cot_bounds(alpha: float, sigma: float, threshold: float, p: int, u: int, epsilon: float) -> CotBounds:
    if not 0 < epsilon < 0.5:
        raise InvalidResolutionError("epsilon must lie in (0, 1/2), got {!r}".format(epsilon))
    if p < 3:
        raise DomainError("the sandwich needs p >= 3")
    q = quantities(alpha, sigma, threshold)
    beta = math.sqrt(1.0 - alpha * alpha)
    noise = gamma_norm_sq(p - 2) / (u * q.rho)
    centre = 1.0 + sigma * alpha * q.lambda_ - 2.0 * q.nu
    slack = (1.0 + sigma) * epsilon

    upper_denominator = sigma * math.sqrt(max(beta * q.lambda_ - epsilon, 0.0) ** 2
                                          + max(1.0 - epsilon, 0.0) ** 2 * noise)
    if upper_denominator <= 0:
        raise InvalidResolutionError(
            "epsilon {!r} leaves the upper bound without a positive denominator".format(epsilon))
    lower_denominator = sigma * math.sqrt((beta * q.lambda_ + epsilon) ** 2 + (1.0 + epsilon) ** 2 * noise)

    return CotBounds(lower=(centre - slack) / lower_denominator,
                     upper=(centre + slack) / upper_denominator,
                     epsilon=epsilon,
                     asymptotic=_one_step(alpha, sigma, q, noise),
                     limit=_one_step(alpha, sigma, q, p / (u * q.rho)))


def supervised_cot(n_bar: float, sigma: float) -> float:
    """Asymptotic co-tangent of the averaging estimator, sqrt(n_bar) / sigma."""
    if n_bar <= 0 or sigma <= 0:
        raise DomainError("n_bar and sigma must be positive")
    return math.sqrt(n_bar) / sigma


def supervised_cot_bounds(sigma: float, p: int, n: int, epsilon: float) -> CotBounds:
    if not 0 < epsilon < 0.5:
        raise InvalidResolutionError("epsilon must lie in (0, 1/2), got {!r}".format(epsilon))
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    root = sigma * math.sqrt(p / n)
    return CotBounds(lower=(1.0 - sigma * epsilon) / ((1.0 + epsilon) * root),
                     upper=(1.0 + sigma * epsilon) / ((1.0 - epsilon) * root),
                     epsilon=epsilon,
                     asymptotic=1.0 / root,
                     limit=1.0 / root)


def iterate_prediction(n_bar: float, u_bar: float, sigma: float, threshold: float, rounds: int) -> float:
    if rounds < 0:
        raise DomainError("the number of rounds must be non-negative")
    x = supervised_cot(n_bar, sigma)
    for _ in range(rounds):
        x = cot_update(x, sigma, threshold, u_bar)
    return x


def accuracy_from_cot(x: float, sigma: float) -> float:
    return accuracy_from_alignment(cot_to_correlation(x), sigma)


def fixed_point_unlabeled(x: float, sigma: float, threshold: float,
                          lowest: float = 1e-8, highest: float = 1e8) -> float:
    """The u_bar at which one self-training step leaves the co-tangent x unchanged.
    Below it a step makes the model worse, above it better."""
    if cot_limit(x, sigma, threshold) <= x:
        raise DomainError("no amount of unlabeled data improves co-tangent {:g}".format(x))

    def gain(log_u_bar):
        return cot_update(x, sigma, threshold, math.exp(log_u_bar)) - x

    if gain(math.log(highest)) <= 0:
        raise DomainError("the fixed point lies beyond u_bar = {:g}".format(highest))
    if gain(math.log(lowest)) >= 0:
        return lowest
    return math.exp(optimize.brentq(gain, math.log(lowest), math.log(highest), xtol=1e-12))


def ridge_kappa(ridge_lambda: float, sigma: float) -> float:
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    if ridge_lambda < 0:
        raise DomainError("lambda must be non-negative")
    s2 = sigma * sigma
    if math.isinf(ridge_lambda):
        return early_stop_factor(sigma)
    return (1.0 + s2) / s2 * (s2 + ridge_lambda) / (1.0 + s2 + ridge_lambda)


def early_stop_factor(sigma: float) -> float:
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    return 1.0 + sigma ** -2


def _exp(value: float) -> float:
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf


def margin_lower_bound(alpha: float, gamma: float, sigma: float, margin_ratio: float) -> MarginBound:
    """Lower bound on cot(beta_hat, mu) for the population pseudo-label fit when X has margin
    gamma <= X <= M gamma. The strong form holds once alpha gamma > sqrt(2 log 12M) sigma."""
    if not 1.0 >= gamma >= sigma > 0:
        raise DomainError("need 1 >= gamma >= sigma > 0")
    if margin_ratio < 1:
        raise DomainError("the margin ratio M must be at least 1")
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    c = (alpha * gamma) ** 2 / (2.0 * sigma * sigma)
    growth = _exp(c)
    factor = 1.0 - 6.0 * margin_ratio / growth
    bound = sigma * growth / 4.0 * gamma * factor
    condition_met = alpha * gamma > math.sqrt(2.0 * math.log(12.0 * margin_ratio)) * sigma
    # under the condition 6 M e^-C < 1/2, so the general bound is at least sigma gamma e^C / 8
    strong_bound = 0.1 * sigma * gamma * growth
    vacuous = factor <= 0
    if vacuous:
        logger.warning("margin bound is vacuous at alpha=%g gamma=%g sigma=%g M=%g", alpha, gamma, sigma, margin_ratio)
    return MarginBound(bound, condition_met, strong_bound, vacuous)


def rejection_mislabel_bound(alpha: float, gamma_bar: float, threshold_bar: float,
                             sigma: float = 1.0, x_law: XLaw = None) -> float:
    """Upper bound on P(sign(beta_init^T z) != sign(mu^T z)) for z = X mu + sigma g conditioned on
    |beta_init^T z| >= Gamma, with X >= sigma gamma_bar and Gamma = alpha sigma threshold_bar."""
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    if gamma_bar <= 0 or threshold_bar < 0:
        raise DomainError("need gamma_bar > 0 and threshold_bar >= 0")
    if threshold_bar == 0:
        return 2.0 * q_tail(alpha * gamma_bar)
    x_law = x_law or XLaw.of_constant_one()
    numerator = (q_tail(gamma_bar) * q_tail(alpha * threshold_bar / math.sqrt(1.0 - alpha * alpha))
                 + q_tail(alpha * (gamma_bar + threshold_bar)))
    # P(|beta^T z| >= Gamma) >= P(X >= Gamma / alpha) / 2
    acceptance = x_law.tail(sigma * threshold_bar)
    if acceptance == 0:
        return math.inf
    return 2.0 * numerator / acceptance


def folded_tail_bound(alpha: float) -> float:
    if alpha < 0:
        raise DomainError("alpha must be non-negative")
    return SQRT_2_OVER_PI * math.exp(-0.5 * alpha * alpha)
