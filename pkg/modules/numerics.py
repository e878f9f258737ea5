import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy import special

from modules.errors import DegenerateModelError

"""
* =============================================================== *
* Scalar and vector primitives used by every other module:        *
* normal tails and densities, alignment geometry between vectors  *
* and reproducible random streams.                                *
* =============================================================== *

RANDOM STREAMS
-------------------------
A SeedSpec names one stream by (master_seed, stream_index). Nested streams are obtained
with SeedSpec.child(k), so a trial can hand separate streams to its labeled set, to each
round's unlabeled batch and to its test set without the streams ever overlapping.
    rng()       ->      a fresh numpy Generator positioned at the start of the stream
"""

logger = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_index: int = 0
    path: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.stream_index < 0 or any(k < 0 for k in self.path):
            raise ValueError("stream indices must be non-negative")

    def child(self, index: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, self.stream_index, self.path + (index,))

    def sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=self.master_seed & SEED_MASK,
                                      spawn_key=(self.stream_index,) + self.path)

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.sequence()))


def q_tail(x):
    """P(N(0,1) > x). Accepts scalars or arrays."""
    result = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(result) if np.ndim(result) == 0 else result


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    result = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return float(result) if np.ndim(result) == 0 else result


def hard_sign(t):
    """sign with sign(0) = +1, the tie convention used for every hard label."""
    return np.where(np.asarray(t) >= 0, 1.0, -1.0)


def _checked_pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError("vectors must be one-dimensional with equal length, got {} and {}".format(a.shape, b.shape))
    return a, b


def correlation(a, b) -> float:
    a, b = _checked_pair(a, b)
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise DegenerateModelError("correlation is undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (norm_a * norm_b), -1.0, 1.0))


def cot_from_correlation(rho: float) -> float:
    if abs(rho) >= 1.0:
        # perfect alignment is reachable, so report it instead of failing
        logger.debug("cotangent saturated at correlation %r", rho)
        return math.copysign(math.inf, rho)
    return rho / math.sqrt(1.0 - rho * rho)


def cotangent(a, b) -> float:
    return cot_from_correlation(correlation(a, b))


def gamma_norm_sq(p: int) -> float:
    """(E||g||)^2 for g ~ N(0, I_p), from the chi mean sqrt(2) Gamma((p+1)/2) / Gamma(p/2)."""
    if p < 1:
        raise ValueError("p must be a positive integer")
    log_mean = 0.5 * math.log(2.0) + special.gammaln((p + 1) / 2.0) - special.gammaln(p / 2.0)
    return float(math.exp(2.0 * log_mean))


def gaussian_vector(p: int, seed: SeedSpec) -> np.ndarray:
    if p < 1:
        raise ValueError("p must be a positive integer")
    return seed.rng().standard_normal(p)


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise DegenerateModelError("cannot normalise a zero vector")
    return v / norm


def mean_and_stderr(samples) -> Tuple[float, float]:
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        return float(samples.mean()), 0.0
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(samples.size))
