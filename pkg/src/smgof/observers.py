"""Observation constructors mapping raw paths to ``(Y_i, Xhat_i)`` series,
and the variance functions that pair with each of them.

The array kernels (``*_kernel``) accept leading batch axes so the bootstrap
can push a whole batch of simulated paths through in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BlockMisalignedError
from .model import FineGrid, ModelKind, ObservationSeries, ParametricVolModel, UniformGrid
from .simulate import PathRecord

PI2 = math.pi**2


def default_alpha_n(n):
    return math.log(n) ** 2


@dataclass(frozen=True)
class TruncationRule:
    """Threshold sequence ``alpha_n`` for truncated realised volatility."""

    alpha_fn: Callable = field(default=default_alpha_n)

    def threshold(self, n: int) -> float:
        a = float(self.alpha_fn(n))
        if not a > 0:
            raise ValueError(f"truncation threshold must be positive, got {a}")
        return a


# kernels ------------------------------------------------------------------

def local_vol_kernel(x: np.ndarray):
    """``Y_i = n (X_{i+1} - X_i)**2`` along the last axis (length n+1)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] - 1
    return n * np.diff(x, axis=-1) ** 2, x[..., :-1, None]


def truncated_kernel(x: np.ndarray, alpha_n: float):
    y, xhat = local_vol_kernel(x)
    return np.where(y < alpha_n, y, 0.0), xhat


def _fine_check(x, n=None):
    size = x.shape[-1]
    if n is None:
        n = math.isqrt(size - 1)
    if size != n * n + 1 or n < 1:
        raise BlockMisalignedError(f"fine path has {size} points, expected n**2 + 1")
    return n


def cosine_weights(n: int) -> np.ndarray:
    """``cos(pi (i + 1/2) / n)``, built so that ``w[n-1-i] == -w[i]`` exactly."""
    half = n // 2
    w = np.zeros(n)
    w[:half] = np.cos(np.pi * (np.arange(half) + 0.5) / n)
    w[n - half :] = -w[:half][::-1]
    return w


def _cosine_sum(blocks: np.ndarray) -> np.ndarray:
    # fold i with n-1-i; block-constant input then cancels exactly
    n = blocks.shape[-1]
    half = n // 2
    w = cosine_weights(n)[:half]
    folded = blocks[..., :half] - blocks[..., ::-1][..., :half]
    return folded @ w


def microstructure_kernel(xt: np.ndarray, n: int | None = None):
    """Pre-averaged observations from noisy prices on the fine grid.

    Returns ``(Y, xhat)`` with ``xhat[..., j, :] = (X1hat_j, X2hat_j)``.
    """
    xt = np.asarray(xt, dtype=float)
    n = _fine_check(xt, n)
    lead = xt.shape[:-1]
    blocks = xt[..., : n * n].reshape(*lead, n, n)
    diffs = np.diff(xt, axis=-1).reshape(*lead, n, n)
    x1hat = blocks.sum(axis=-1) / n
    x2hat = (diffs**2).sum(axis=-1) / (2 * n)
    s = _cosine_sum(blocks)
    y = PI2 * (2.0 / n * s**2 - x2hat)
    return y, np.stack([x1hat, x2hat], axis=-1)


def stoch_vol_kernel(x1: np.ndarray, n: int | None = None):
    """Vol-of-vol observations from prices on the fine grid."""
    x1 = np.asarray(x1, dtype=float)
    n = _fine_check(x1, n)
    lead = x1.shape[:-1]
    spot = (n * n) * np.diff(x1, axis=-1) ** 2
    blocks = spot.reshape(*lead, n, n)
    x2hat = blocks.sum(axis=-1) / n
    s = _cosine_sum(blocks)
    y = 2 * PI2 * (s**2 / n - x2hat**2)
    x1hat = x1[..., : n * n : n]
    return y, np.stack([x1hat, x2hat], axis=-1)


# path-level observers -------------------------------------------------------

def _require_uniform(path: PathRecord) -> int:
    if not isinstance(path.grid, UniformGrid):
        raise TypeError("observer needs a path on the uniform grid")
    return path.grid.n


def _require_fine(path: PathRecord) -> int:
    if not isinstance(path.grid, FineGrid):
        raise BlockMisalignedError("observer needs a path on the fine grid")
    return _fine_check(path.component(0), path.grid.n)


def local_vol_observer(path: PathRecord) -> ObservationSeries:
    """Realised volatility ``Y_i = n (dX_i)**2`` with ``Xhat_i = X_{t_i}``."""
    n = _require_uniform(path)
    y, xhat = local_vol_kernel(path.component(0))
    return ObservationSeries(UniformGrid(n), y, xhat, ModelKind.LOCAL_VOL)


def jump_robust_observer(path: PathRecord, rule: TruncationRule | None = None) -> ObservationSeries:
    """Truncated realised volatility: scaled squared increments at or above
    ``alpha_n`` are set to zero."""
    n = _require_uniform(path)
    rule = rule or TruncationRule()
    y, xhat = truncated_kernel(path.component(0), rule.threshold(n))
    return ObservationSeries(UniformGrid(n), y, xhat, ModelKind.JUMPS)


def microstructure_observer(noisy_path: PathRecord) -> ObservationSeries:
    n = _require_fine(noisy_path)
    y, xhat = microstructure_kernel(noisy_path.component(0), n)
    return ObservationSeries(UniformGrid(n), y, xhat, ModelKind.MICROSTRUCTURE)


def stoch_vol_observer(path: PathRecord) -> ObservationSeries:
    n = _require_fine(path)
    y, xhat = stoch_vol_kernel(path.component(0), n)
    return ObservationSeries(UniformGrid(n), y, xhat, ModelKind.STOCH_VOL)


def observe(path: PathRecord, kind: ModelKind, rule: TruncationRule | None = None) -> ObservationSeries:
    kind = ModelKind(kind)
    if kind is ModelKind.LOCAL_VOL:
        return local_vol_observer(path)
    if kind is ModelKind.JUMPS:
        return jump_robust_observer(path, rule)
    if kind is ModelKind.MICROSTRUCTURE:
        return microstructure_observer(path)
    return stoch_vol_observer(path)


def observe_batch(paths: np.ndarray, kind: ModelKind, rule: TruncationRule | None = None):
    """Kernel dispatch for a batch of price paths with shape (B, n_times)."""
    kind = ModelKind(kind)
    if kind is ModelKind.LOCAL_VOL:
        return local_vol_kernel(paths)
    if kind is ModelKind.JUMPS:
        n = paths.shape[-1] - 1
        return truncated_kernel(paths, (rule or TruncationRule()).threshold(n))
    if kind is ModelKind.MICROSTRUCTURE:
        return microstructure_kernel(paths)
    return stoch_vol_kernel(paths)


# variance functions and model constructors -----------------------------------

def variance_from_mean(kind: ModelKind, mu, x):
    """Conditional variance of ``Y`` paired with each observer."""
    kind = ModelKind(kind)
    if kind in (ModelKind.LOCAL_VOL, ModelKind.JUMPS):
        return 2.0 * mu**2
    if kind is ModelKind.MICROSTRUCTURE:
        return 2.0 * (mu + PI2 * x[1]) ** 2
    return 2.0 * (mu + 2.0 * PI2 * x[1] ** 2) ** 2


class _PairedVariance:
    def __init__(self, mu, kind):
        self.mu = mu
        self.kind = ModelKind(kind)

    def __call__(self, theta, t, x):
        return variance_from_mean(self.kind, self.mu(theta, t, x), x)


def make_model(mu, kind=ModelKind.LOCAL_VOL, param_dim=1, basis=None, bounds=None,
               name="custom") -> ParametricVolModel:
    """Build a :class:`ParametricVolModel` whose variance is the one paired
    with the observer for ``kind``."""
    return ParametricVolModel(mu, _PairedVariance(mu, kind), param_dim, bounds, basis, name)


def constant_mean(theta, t, x):
    return np.full(np.shape(x[0]), theta[0], dtype=float)


def constant_basis(t, x):
    return np.ones(np.shape(x[0]) + (1,))


def proportional_mean(theta, t, x):
    return theta[0] * np.square(x[0])


def proportional_basis(t, x):
    return np.square(x[0])[..., None]


def constant_model(kind=ModelKind.LOCAL_VOL, bounds=None) -> ParametricVolModel:
    """``mu = theta``."""
    return make_model(constant_mean, kind, 1, constant_basis, bounds, "constant")


def proportional_model(kind=ModelKind.LOCAL_VOL, bounds=None) -> ParametricVolModel:
    """``mu = theta * x**2``."""
    return make_model(proportional_mean, kind, 1, proportional_basis, bounds, "proportional")
