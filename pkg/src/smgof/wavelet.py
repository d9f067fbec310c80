"""Haar scaling coefficients, the fast Haar cascade, the max statistic and
its Gumbel normalising constants.

Functions taking coefficient arrays operate on the last axis, so a batch of
series can be transformed at once.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import LevelTooFineError, NotPowerOfTwoError
from .model import NormalisedSeries

INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class WaveletDecomposition:
    J: int
    scaling: np.ndarray
    alpha00: float
    beta: tuple  # beta[j] has 2**j entries, j = 0..J-1

    def coefficients(self) -> np.ndarray:
        """``alpha00`` followed by every ``beta[j][k]`` in level order."""
        return np.concatenate([[self.alpha00], *self.beta]) if self.J else np.array([self.alpha00])

    def to_json(self) -> str:
        return json.dumps(
            {
                "J": self.J,
                "scaling": [float(v) for v in self.scaling],
                "alpha00": float(self.alpha00),
                "beta": [[float(v) for v in level] for level in self.beta],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "WaveletDecomposition":
        d = json.loads(text)
        return cls(d["J"], np.array(d["scaling"]), d["alpha00"], tuple(np.array(b) for b in d["beta"]))


@dataclass(frozen=True)
class GumbelConstants:
    a: float
    b: float
    m: int


def resolution_level(n: int) -> int:
    """``J = floor(log2(n) / 2)`` in integer arithmetic."""
    n = int(n)
    if n < 4:
        raise ValueError("resolution level needs n >= 4")
    return (n.bit_length() - 1) // 2


def bin_starts(n: int, J: int) -> np.ndarray:
    """First index of each bin: the smallest i with ``floor(2**J i / n) == k``."""
    m = 1 << J
    return -((-n * np.arange(m)) // m)


def scaling_coefficients(z, J: int) -> np.ndarray:
    """``alpha_hat[k] = n**-1 sum_i phi_{J,k}(t_i) Z_i`` with ``t_i = i/n``.

    ``z`` may be a :class:`NormalisedSeries` or an array whose last axis
    holds the n observations.
    """
    z = np.asarray(z.z if isinstance(z, NormalisedSeries) else z, dtype=float)
    n = z.shape[-1]
    if J < 0 or (1 << J) > n:
        raise LevelTooFineError(f"2**J = {1 << J} exceeds n = {n}")
    sums = np.add.reduceat(z, bin_starts(n, J), axis=-1)
    return sums * (2.0 ** (J / 2) / n)


def fast_haar_transform(scaling):
    """Haar cascade from level-J scaling coefficients.

    Returns ``(alpha00, beta)`` with ``beta[j]`` of length ``2**j`` along the
    last axis.
    """
    s = np.asarray(scaling, dtype=float)
    m = s.shape[-1]
    if m < 1 or m & (m - 1):
        raise NotPowerOfTwoError(f"length {m} is not a power of two")
    J = m.bit_length() - 1
    beta = [None] * J
    for j in range(J - 1, -1, -1):
        even, odd = s[..., 0::2], s[..., 1::2]
        beta[j] = (even - odd) * INV_SQRT2
        s = (even + odd) * INV_SQRT2
    return s[..., 0], tuple(beta)


def decompose(z, J: int) -> WaveletDecomposition:
    scaling = scaling_coefficients(z, J)
    alpha00, beta = fast_haar_transform(scaling)
    return WaveletDecomposition(J, scaling, float(alpha00), beta)


def max_statistic(dec: WaveletDecomposition) -> float:
    """Largest absolute value among ``alpha00`` and the ``beta[j][k]``."""
    return float(np.max(np.abs(dec.coefficients())))


def max_statistic_array(z: np.ndarray, J: int) -> np.ndarray:
    """Batch version of ``max_statistic(decompose(z, J))`` over leading axes."""
    alpha00, beta = fast_haar_transform(scaling_coefficients(z, J))
    stat = np.abs(alpha00)
    for level in beta:
        stat = np.maximum(stat, np.max(np.abs(level), axis=-1))
    return stat


def gumbel_constants(J: int) -> GumbelConstants:
    """``a_m = (2 log m)**-1/2`` and ``b_m = 1/a_m - a_m log(pi log m) / 2`` for ``m = 2**J``."""
    if J < 1:
        raise ValueError("Gumbel constants need J >= 1")
    m = 1 << J
    log_m = math.log(m)
    a = (2.0 * log_m) ** -0.5
    b = 1.0 / a - 0.5 * a * math.log(math.pi * log_m)
    return GumbelConstants(a, b, m)


def gumbel_quantile(J: int, alpha: float) -> float:
    """Critical value ``q = -a log(-log(1 - alpha)) + b`` for the scaled statistic."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    g = gumbel_constants(J)
    return -g.a * math.log(-math.log1p(-alpha)) + g.b


def gumbel_pvalue(scaled_statistic: float, J: int) -> float:
    g = gumbel_constants(J)
    u = -(scaled_statistic - g.b) / g.a
    if u > 700.0:
        return 1.0
    return -math.expm1(-math.exp(u))
