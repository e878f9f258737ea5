import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Tuple, Union

import numpy as np
from scipy import integrate

from modules.experimentstate import XLawVariant
from modules.numerics import SeedSpec, hard_sign, mean_and_stderr, q_tail

"""
* =============================================================== *
* This module contains the samplers and population descriptors    *
* for the two-class mixtures x = yXmu + sigma*g. X = 1 gives the  *
* Gaussian mixture; other laws of X give the generalised mixture. *
* =============================================================== *

HOW TO ADD A NEW LAW FOR X
-------------------------
1.  Add a member to XLawVariant in experimentstate.py.
2.  Give XLaw a static factory of_<name>() and a branch in each of
        mean()              ->          E[X]
        tail(t)             ->          P(X > t)
        sample(rng, n)      ->          n independent draws
        expect(fn)          ->          E[fn(X)] for a scalar function fn
    The law must be strictly positive and must satisfy E[X^2] = 1.

SAMPLE CACHE
-------------------------
save_cache / load_cache write a sample set as little-endian binary:
    header              ->          three int64 values: p, count, label flag (0 or 1)
    inputs              ->          float64, column by column (p columns of length count)
    labels              ->          float64, count values, present only when the flag is 1
cached_labeled(spec, n, seed, cache_dir) returns sample_labeled(spec, n, seed), reading it from
cache_dir when an earlier run already wrote it there. A rerun of an experiment with the same
cache directory skips the sampling and produces the same tables.
"""

logger = logging.getLogger(__name__)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
CACHE_DTYPE = np.dtype("<f8")
HEADER_DTYPE = np.dtype("<i8")


class XLaw:
    """Law of the positive scalar X scaling the class mean."""

    BOUNDED_SHAPES = ("uniform", "endpoints")

    def __init__(self, variant: XLawVariant, margin_ratio: float = 1.0, shape: str = "uniform"):
        if margin_ratio < 1:
            raise ValueError("the margin ratio M must be at least 1")
        if shape not in XLaw.BOUNDED_SHAPES:
            raise ValueError("unknown bounded-margin shape '{}'".format(shape))
        self.variant = variant
        self.margin_ratio = float(margin_ratio)
        self.shape = shape
        self.gamma = self._normalised_gamma() if variant is XLawVariant.BOUNDED_MARGIN else None

    @staticmethod
    def of_constant_one():
        return XLaw(XLawVariant.CONSTANT_ONE)

    @staticmethod
    def of_folded_normal():
        return XLaw(XLawVariant.FOLDED_NORMAL)

    @staticmethod
    def of_bounded_margin(margin_ratio: float, shape: str = "uniform"):
        """X supported on [gamma, M*gamma]. gamma is fixed by the requirement E[X^2] = 1."""
        return XLaw(XLawVariant.BOUNDED_MARGIN, margin_ratio, shape)

    def _normalised_gamma(self) -> float:
        m = self.margin_ratio
        if self.shape == "uniform":
            # E[(1 + (M-1)U)^2] for U uniform on [0, 1]
            raw_second_moment = m + (m - 1.0) ** 2 / 3.0
        else:
            raw_second_moment = (1.0 + m * m) / 2.0
        return 1.0 / math.sqrt(raw_second_moment)

    def __eq__(self, other):
        return (isinstance(other, XLaw) and self.variant is other.variant
                and self.margin_ratio == other.margin_ratio and self.shape == other.shape)

    def __repr__(self):
        if self.variant is XLawVariant.BOUNDED_MARGIN:
            return "XLaw(bounded_margin, M={:g}, gamma={:.6g}, {})".format(self.margin_ratio, self.gamma, self.shape)
        return "XLaw({})".format(self.variant.value)

    @property
    def upper(self) -> float:
        return self.gamma * self.margin_ratio

    def mean(self) -> float:
        if self.variant is XLawVariant.CONSTANT_ONE:
            return 1.0
        if self.variant is XLawVariant.FOLDED_NORMAL:
            return SQRT_2_OVER_PI
        return self.gamma * (1.0 + self.margin_ratio) / 2.0

    def second_moment(self) -> float:
        return 1.0

    def tail(self, t: float) -> float:
        if self.variant is XLawVariant.CONSTANT_ONE:
            return 1.0 if t < 1.0 else 0.0
        if self.variant is XLawVariant.FOLDED_NORMAL:
            return 1.0 if t < 0 else 2.0 * q_tail(t)
        if t < self.gamma:
            return 1.0
        if t >= self.upper:
            return 0.0
        if self.shape == "endpoints":
            return 0.5
        return (self.upper - t) / (self.upper - self.gamma)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.variant is XLawVariant.CONSTANT_ONE:
            return np.ones(n)
        if self.variant is XLawVariant.FOLDED_NORMAL:
            return np.abs(rng.standard_normal(n))
        if self.shape == "endpoints":
            return np.where(rng.random(n) < 0.5, self.gamma, self.upper)
        return self.gamma + (self.upper - self.gamma) * rng.random(n)

    def expect(self, fn: Callable[[float], float]) -> float:
        if self.variant is XLawVariant.CONSTANT_ONE:
            return float(fn(1.0))
        if self.variant is XLawVariant.FOLDED_NORMAL:
            value, _ = integrate.quad(lambda t: fn(t) * SQRT_2_OVER_PI * math.exp(-0.5 * t * t), 0.0, math.inf)
            return value
        if self.shape == "endpoints" or self.margin_ratio == 1.0:
            return 0.5 * (float(fn(self.gamma)) + float(fn(self.upper)))
        width = self.upper - self.gamma
        value, _ = integrate.quad(lambda t: fn(t) / width, self.gamma, self.upper)
        return value


@dataclass(eq=False)
class MixtureSpec:
    mu: np.ndarray
    sigma: float
    x_law: XLaw
    p: int

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        if self.mu.shape != (self.p,):
            raise ValueError("mu must have length p = {}".format(self.p))
        if abs(np.linalg.norm(self.mu) - 1.0) > 1e-12:
            raise ValueError("mu must have unit norm")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    @staticmethod
    def of_dimension(p: int, sigma: float, x_law: XLaw = None):
        """mu is the first standard basis vector."""
        mu = np.zeros(p)
        mu[0] = 1.0
        return MixtureSpec(mu, sigma, x_law if x_law is not None else XLaw.of_constant_one(), p)


@dataclass(eq=False)
class UnlabeledSet:
    inputs: np.ndarray

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        if self.inputs.ndim != 2:
            raise ValueError("inputs must be a (count, p) matrix")

    @property
    def count(self) -> int:
        return self.inputs.shape[0]

    @property
    def p(self) -> int:
        return self.inputs.shape[1]


@dataclass(eq=False)
class LabeledSet(UnlabeledSet):
    labels: np.ndarray = None

    def __post_init__(self):
        super().__post_init__()
        self.labels = np.asarray(self.labels, dtype=float)
        if self.labels.shape != (self.count,):
            raise ValueError("need one label per input")
        if not np.all(np.abs(self.labels) == 1.0):
            raise ValueError("labels must be -1 or +1")

    def unlabeled(self) -> UnlabeledSet:
        return UnlabeledSet(self.inputs)


def sample_labeled(spec: MixtureSpec, n: int, seed: SeedSpec) -> LabeledSet:
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = seed.rng()
    labels = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    scale = labels * spec.x_law.sample(rng, n)
    noise = rng.standard_normal((n, spec.p))
    inputs = np.outer(scale, spec.mu) + spec.sigma * noise
    return LabeledSet(inputs, labels)


def sample_unlabeled(spec: MixtureSpec, u: int, seed: SeedSpec) -> UnlabeledSet:
    if u < 1:
        raise ValueError("u must be at least 1")
    return sample_labeled(spec, u, seed).unlabeled()


def population_second_moment(spec: MixtureSpec) -> Tuple[float, float]:
    """Eigenvalues of E[xx^T] along mu and orthogonal to mu."""
    noise = spec.sigma ** 2
    return noise + spec.x_law.second_moment(), noise


@dataclass
class SplitIdentity:
    noise_side: float
    noise_side_stderr: float
    signal_side: float
    signal_side_stderr: float
    difference_stderr: float

    @property
    def difference(self) -> float:
        return self.noise_side - self.signal_side


def split_identity_check(fn: Callable, sigma: float, draws: int, seed: SeedSpec) -> SplitIdentity:
    """Monte-Carlo estimates of E[f(h + sigma g) g] and sigma E[f(h + sigma g) h]."""
    rng = seed.rng()
    h = rng.standard_normal(draws)
    g = rng.standard_normal(draws)
    values = fn(h + sigma * g)
    noise_side = values * g
    signal_side = sigma * values * h
    noise_mean, noise_se = mean_and_stderr(noise_side)
    signal_mean, signal_se = mean_and_stderr(signal_side)
    _, difference_se = mean_and_stderr(noise_side - signal_side)
    return SplitIdentity(noise_mean, noise_se, signal_mean, signal_se, difference_se)


def mislabel_rate(spec: MixtureSpec, alpha: float, threshold: float, draws: int,
                  seed: SeedSpec) -> Tuple[float, float]:
    """Among points x = X mu + sigma g with |beta^T x| >= threshold, the frequency with
    which sign(beta^T x) and sign(mu^T x) disagree, for a unit beta at correlation alpha."""
    rng = seed.rng()
    x_values = spec.x_law.sample(rng, draws)
    along = x_values + spec.sigma * rng.standard_normal(draws)
    across = spec.sigma * rng.standard_normal(draws)
    projection = alpha * along + math.sqrt(1.0 - alpha * alpha) * across
    accepted = np.abs(projection) >= threshold
    if not accepted.any():
        return 0.0, 0.0
    disagree = hard_sign(projection[accepted]) != hard_sign(along[accepted])
    return mean_and_stderr(disagree.astype(float))


def folded_tail_moment(alpha: float, draws: int, seed: SeedSpec) -> Tuple[float, float]:
    """Monte-Carlo E[1(|g| > alpha) |g|]."""
    g = np.abs(seed.rng().standard_normal(draws))
    return mean_and_stderr(np.where(g > alpha, g, 0.0))


def save_cache(path: Union[str, Path], data: UnlabeledSet) -> Path:
    path = Path(path)
    has_labels = isinstance(data, LabeledSet)
    header = np.array([data.p, data.count, int(has_labels)], dtype=HEADER_DTYPE)
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(data.inputs.T, dtype=CACHE_DTYPE).tobytes())
        if has_labels:
            f.write(data.labels.astype(CACHE_DTYPE).tobytes())
    logger.debug("cached %d samples of dimension %d at %s", data.count, data.p, path)
    return path


def load_cache(path: Union[str, Path]) -> UnlabeledSet:
    raw = Path(path).read_bytes()
    p, count, has_labels = (int(v) for v in np.frombuffer(raw, dtype=HEADER_DTYPE, count=3))
    offset = 3 * HEADER_DTYPE.itemsize
    columns = np.frombuffer(raw, dtype=CACHE_DTYPE, count=p * count, offset=offset)
    inputs = columns.reshape(p, count).T.copy()
    if not has_labels:
        return UnlabeledSet(inputs)
    offset += p * count * CACHE_DTYPE.itemsize
    labels = np.frombuffer(raw, dtype=CACHE_DTYPE, count=count, offset=offset).copy()
    return LabeledSet(inputs, labels)


def cache_file_name(spec: MixtureSpec, n: int, seed: SeedSpec) -> str:
    """One file per (stream, mixture, count). mu is always the first basis vector in experiments."""
    stream = "-".join(str(k) for k in (seed.master_seed, seed.stream_index) + seed.path)
    law = spec.x_law.variant.value
    if spec.x_law.variant is XLawVariant.BOUNDED_MARGIN:
        law += "{:g}{}".format(spec.x_law.margin_ratio, spec.x_law.shape)
    return "{}_p{}_n{}_s{:.10g}_{}.bin".format(stream, spec.p, n, spec.sigma, law)


def cached_labeled(spec: MixtureSpec, n: int, seed: SeedSpec,
                   cache_dir: Union[str, Path, None] = None) -> LabeledSet:
    if cache_dir is None:
        return sample_labeled(spec, n, seed)
    path = Path(cache_dir) / cache_file_name(spec, n, seed)
    if path.exists():
        data = load_cache(path)
        if isinstance(data, LabeledSet) and data.count == n and data.p == spec.p:
            return data
        logger.warning("ignoring cache file %s: it does not hold %d labeled samples of dimension %d",
                       path, n, spec.p)
    data = sample_labeled(spec, n, seed)
    save_cache(path, data)
    return data

