import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd

from modules.distributions import XLaw
from modules.estimators import LinearModel
from modules.experimentstate import ClassificationLoss, ScanKind
from modules.numerics import SeedSpec, correlation

"""
* =============================================================== *
* Population losses along the ray beta = alpha * mu.              *
* On the ray beta^T x = alpha (yX + sigma g0) with g0 a standard  *
* normal, so every scan runs on scalar draws of s = yX + sigma g0 *
* shared by all grid points.                                      *
* =============================================================== *
"""

logger = logging.getLogger(__name__)

MIN_ACCEPTANCE = 1e-3
CSV_COLUMNS = ["alpha", "value", "std_error", "flagged"]


@dataclass(eq=False)
class RayScan:
    kind: ScanKind
    alphas: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    flagged: np.ndarray
    slopes: np.ndarray = None

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        if self.alphas.ndim != 1 or np.any(np.diff(self.alphas) <= 0):
            raise ValueError("the alpha grid must be strictly increasing")

    def argmin(self) -> float:
        """Grid point of the smallest unflagged value."""
        values = np.where(self.flagged, np.inf, self.values)
        return float(self.alphas[int(np.argmin(values))])

    def local_minima(self) -> List[float]:
        v = self.values
        inner = np.flatnonzero((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:])) + 1
        return [float(self.alphas[i]) for i in inner]

    def sign_changes(self) -> List[float]:
        """Midpoints of the grid cells where the signed slope changes sign. Exact zeros are skipped."""
        if self.slopes is None:
            raise ValueError("{} scan carries no slopes".format(self.kind.value))
        signs = np.sign(self.slopes)
        nonzero = np.flatnonzero(signs)
        crossings = []
        for a, b in zip(nonzero[:-1], nonzero[1:]):
            if signs[a] != signs[b]:
                crossings.append(float(0.5 * (self.alphas[a] + self.alphas[b])))
        return crossings

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"alpha": self.alphas, "value": self.values,
                             "std_error": self.std_errors, "flagged": self.flagged.astype(bool)},
                            columns=CSV_COLUMNS)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        self.to_frame().to_csv(path, index=False, float_format="%.10g")
        return path


@dataclass(frozen=True)
class SemiSupSpec:
    mix_rho: float
    constraint_xi: float
    threshold: float

    def __post_init__(self):
        if not 0 <= self.mix_rho <= 1:
            raise ValueError("mix_rho must lie in [0, 1]")
        if self.constraint_xi < 0 or self.threshold < 0:
            raise ValueError("constraint_xi and the threshold must be non-negative")


def default_alphas(points: int = 401, limit: float = 3.0) -> np.ndarray:
    return np.linspace(-limit, limit, points)


def _ray_draws(x_law: XLaw, sigma: float, mc_samples: int, seed: SeedSpec):
    if mc_samples < 1000:
        raise ValueError("a ray scan needs at least 1000 Monte-Carlo samples")
    rng = seed.rng()
    labels = np.where(rng.random(mc_samples) < 0.5, -1.0, 1.0)
    signal = labels * x_law.sample(rng, mc_samples)
    return labels, signal + sigma * rng.standard_normal(mc_samples)


def supervised_loss_ray(x_law: XLaw, sigma: float, alphas) -> RayScan:
    """(1/2)((E[X^2] + sigma^2) alpha^2 - 2 E[X] alpha + 1), minimised at E[X] / (E[X^2] + sigma^2)."""
    alphas = np.asarray(alphas, dtype=float)
    curvature = x_law.second_moment() + sigma * sigma
    values = 0.5 * (curvature * alphas ** 2 - 2.0 * x_law.mean() * alphas + 1.0)
    zeros = np.zeros_like(alphas)
    return RayScan(ScanKind.SUPERVISED, alphas, values, zeros, zeros.astype(bool))


def supervised_minimizer(x_law: XLaw, sigma: float) -> float:
    return x_law.mean() / (x_law.second_moment() + sigma * sigma)


def supervised_loss_ray_mc(x_law: XLaw, sigma: float, alphas, mc_samples: int, seed: SeedSpec) -> RayScan:
    """Sampling estimate of (1/2) E[(y - beta^T x)^2], the cross-check of the closed form."""
    alphas = np.asarray(alphas, dtype=float)
    labels, s = _ray_draws(x_law, sigma, mc_samples, seed)
    values = np.empty_like(alphas)
    errors = np.empty_like(alphas)
    for i, alpha in enumerate(alphas):
        losses = 0.5 * (labels - alpha * s) ** 2
        values[i] = losses.mean()
        errors[i] = losses.std(ddof=1) / math.sqrt(mc_samples)
    return RayScan(ScanKind.SUPERVISED, alphas, values, errors, np.zeros(alphas.shape, dtype=bool))


def unsupervised_loss_ray(x_law: XLaw, sigma: float, threshold: float, alphas, mc_samples: int,
                          seed: SeedSpec) -> RayScan:
    """Pseudo-label loss (1/2) E[(sgn(t) - t)^2 | |t| >= Gamma |alpha|] with t = beta^T x.
    Numerator and acceptance probability come from the same draws."""
    alphas = np.asarray(alphas, dtype=float)
    _, s = _ray_draws(x_law, sigma, mc_samples, seed)
    # for alpha != 0 acceptance does not depend on alpha
    accepted = np.abs(s)[np.abs(s) >= threshold]
    acceptance = accepted.size / mc_samples

    values = np.empty_like(alphas)
    errors = np.zeros_like(alphas)
    flagged = np.zeros(alphas.shape, dtype=bool)
    for i, alpha in enumerate(alphas):
        if alpha == 0:
            # every sample passes and sgn(0) = +1 gives a loss of exactly 1/2
            values[i] = 0.5
            continue
        if acceptance < MIN_ACCEPTANCE:
            flagged[i] = True
        if accepted.size == 0:
            values[i] = math.nan
            continue
        losses = 0.5 * (1.0 - abs(alpha) * accepted) ** 2
        values[i] = losses.mean()
        if accepted.size > 1:
            errors[i] = losses.std(ddof=1) / math.sqrt(accepted.size)
    if flagged.any():
        logger.warning("acceptance %.2g below %g at threshold %g; %d scan points flagged",
                       acceptance, MIN_ACCEPTANCE, threshold, int(flagged.sum()))
    return RayScan(ScanKind.UNSUPERVISED, alphas, values, errors, flagged)


def semisup_ray(spec: SemiSupSpec, x_law: XLaw, sigma: float, alphas, mc_samples: int, seed: SeedSpec,
                kind: ScanKind = ScanKind.SEMISUP_REGULARIZED) -> RayScan:
    supervised = supervised_loss_ray(x_law, sigma, alphas)
    unsupervised = unsupervised_loss_ray(x_law, sigma, spec.threshold, alphas, mc_samples, seed)
    if kind is ScanKind.SEMISUP_CONSTRAINT_INDICATOR:
        feasible = (unsupervised.values <= spec.constraint_xi).astype(float)
        return RayScan(kind, supervised.alphas, feasible, np.zeros_like(feasible), unsupervised.flagged)
    if kind is not ScanKind.SEMISUP_REGULARIZED:
        raise ValueError("semisup_ray cannot produce a {} scan".format(kind.value))
    if spec.mix_rho == 0:
        return RayScan(kind, supervised.alphas, supervised.values.copy(), supervised.std_errors.copy(),
                       supervised.flagged.copy())
    values = (1.0 - spec.mix_rho) * supervised.values + spec.mix_rho * unsupervised.values
    return RayScan(kind, supervised.alphas, values, spec.mix_rho * unsupervised.std_errors, unsupervised.flagged)


def gradient_norm_ray(kind: ScanKind, x_law: XLaw, sigma: float, threshold: float, alphas, mc_samples: int,
                      seed: SeedSpec) -> RayScan:
    """|dL/dalpha| by central differences on the grid (one-sided at the ends). The signed
    derivative is kept in slopes for locating stationary points."""
    if kind is ScanKind.SUPERVISED:
        base = supervised_loss_ray(x_law, sigma, alphas)
    elif kind is ScanKind.UNSUPERVISED:
        base = unsupervised_loss_ray(x_law, sigma, threshold, alphas, mc_samples, seed)
    else:
        raise ValueError("gradient scans exist for the supervised and unsupervised losses only")
    slopes = np.gradient(base.values, base.alphas)
    flagged = base.flagged.copy()
    flagged[1:] |= base.flagged[:-1]
    flagged[:-1] |= base.flagged[1:]
    return RayScan(kind.get_gradient(), base.alphas, np.abs(slopes), np.zeros_like(slopes), flagged, slopes)


def loss_function(loss: ClassificationLoss):
    if loss is ClassificationLoss.LOGISTIC:
        return lambda t: np.logaddexp(0.0, -t)
    if loss is ClassificationLoss.EXPONENTIAL:
        return lambda t: np.exp(-t)
    raise ValueError("unknown loss {!r}".format(loss))


def scale_decay_curve(model: LinearModel, x_law: XLaw, sigma: float, loss: ClassificationLoss, alpha_grid,
                      mc_samples: int, seed: SeedSpec, mu=None) -> RayScan:
    """E[l(alpha |beta^T x|)] along alpha: the pseudo-label loss of alpha * beta goes to zero."""
    alphas = np.asarray(alpha_grid, dtype=float)
    if mu is None:
        mu = np.zeros(model.beta.shape[0])
        mu[0] = 1.0
    if mc_samples < 1000:
        raise ValueError("a ray scan needs at least 1000 Monte-Carlo samples")
    rho = correlation(model.beta, mu)
    rng = seed.rng()
    signal = np.where(rng.random(mc_samples) < 0.5, -1.0, 1.0) * x_law.sample(rng, mc_samples)
    margins = np.abs(model.norm * (rho * signal + sigma * rng.standard_normal(mc_samples)))
    fn = loss_function(loss)

    values = np.empty_like(alphas)
    errors = np.empty_like(alphas)
    for i, alpha in enumerate(alphas):
        losses = fn(alpha * margins)
        values[i] = losses.mean()
        errors[i] = losses.std(ddof=1) / math.sqrt(mc_samples)
    return RayScan(ScanKind.SCALE_DECAY, alphas, values, errors, np.zeros(alphas.shape, dtype=bool))
