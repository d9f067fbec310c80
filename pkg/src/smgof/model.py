"""Domain types: observation grids, parametric volatility models, SDE
descriptions and observation series, plus the normalisation map.

Array conventions used throughout the package:

* covariates are passed to model and SDE handles *component-major*, so
  ``x[0]`` is the first component (the price), ``x[1]`` the second (a
  variance-like covariate), each an array over time points or paths;
* :class:`ObservationSeries` stores ``xhat`` with shape ``(n, q)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteError, NonPositiveVarianceError

DEFAULT_BOUND = 1e6


class ModelKind(str, enum.Enum):
    LOCAL_VOL = "local_vol"
    JUMPS = "jumps"
    MICROSTRUCTURE = "microstructure"
    STOCH_VOL = "stoch_vol"

    @property
    def covariate_dim(self) -> int:
        return 1 if self in (ModelKind.LOCAL_VOL, ModelKind.JUMPS) else 2

    @property
    def fine(self) -> bool:
        """Whether the observer consumes a path on the n**2 fine grid."""
        return self.covariate_dim == 2


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class UniformGrid:
    """Observation times ``t_i = i / n`` for ``i = 0..n``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ValueError(f"grid needs an integer n >= 4, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n

    @property
    def left_times(self) -> np.ndarray:
        """Left endpoints ``t_0..t_{n-1}``, one per observation."""
        return np.arange(self.n) / self.n


@dataclass(frozen=True)
class FineGrid:
    """Fine times ``t'_i = i / n**2`` for ``i = 0..n**2``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ValueError(f"grid needs an integer n >= 4, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def intervals(self) -> int:
        return self.n * self.n

    @property
    def size(self) -> int:
        return self.n * self.n + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.size) / self.intervals

    @property
    def outer(self) -> UniformGrid:
        return UniformGrid(self.n)


def default_bounds(p: int) -> np.ndarray:
    return np.tile([-DEFAULT_BOUND, DEFAULT_BOUND], (p, 1)).astype(float)


@dataclass(frozen=True)
class ParametricVolModel:
    """Null-hypothesis model for the mean and variance of the observations.

    ``mu(theta, t, x)`` and ``sigma2(theta, t, x)`` must broadcast over
    ``t`` and the components ``x[k]``. If ``basis`` is given, the model
    declares itself linear in theta: ``mu(theta, t, x) == basis(t, x) @ theta``
    with ``basis`` returning an ``(n, p)`` design matrix.
    """

    mu: Callable
    sigma2: Callable
    param_dim: int = 1
    bounds: Optional[np.ndarray] = None
    basis: Optional[Callable] = None
    name: str = "custom"

    def __post_init__(self):
        if self.param_dim < 1:
            raise ValueError("param_dim must be positive")
        b = default_bounds(self.param_dim) if self.bounds is None else self.bounds
        b = np.array(b, dtype=float).reshape(self.param_dim, 2)
        if np.any(b[:, 0] > b[:, 1]):
            raise ValueError("parameter bounds must satisfy lo <= hi")
        b.setflags(write=False)
        object.__setattr__(self, "bounds", b)

    @property
    def is_linear(self) -> bool:
        return self.basis is not None

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.bounds[:, 0]) and np.all(theta <= self.bounds[:, 1]))


@dataclass(frozen=True)
class JumpSpec:
    """Finite-activity compound Poisson jumps.

    ``size_sampler(rng, size)`` returns ``size`` i.i.d. jump sizes.
    """

    intensity: float
    size_sampler: Callable = field(default=None)

    def __post_init__(self):
        if not np.isfinite(self.intensity) or self.intensity < 0:
            raise ValueError("jump intensity must be finite and >= 0")
        if self.size_sampler is None:
            object.__setattr__(self, "size_sampler", unit_jumps)


def unit_jumps(rng, size):
    return np.ones(size)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive microstructure noise with conditional variance ``variance(t, x)``.

    With ``kappa=None`` the noise is Gaussian; otherwise it is a
    unit-variance Student-t with ``kappa + 1`` degrees of freedom, so moments
    strictly above order ``kappa`` do not exist but order ``kappa`` does.
    """

    variance: Callable
    kappa: Optional[float] = None

    def __post_init__(self):
        if self.kappa is not None and self.kappa <= 2:
            raise ValueError("kappa must exceed 2 for finite noise variance")


@dataclass(frozen=True)
class SdeSpec:
    """Scalar Ito SDE ``dX = b(t, X) dt + g(t, X) dB (+ jumps)``.

    ``drift`` and ``diffusion`` receive the time and the full (possibly
    joint) state with shape ``(d, n_paths)``; ``diffusion`` returns the
    Brownian loading, i.e. the square root of the local variance.
    """

    drift: Callable
    diffusion: Optional[Callable]
    x0: float = 1.0
    jump: Optional[JumpSpec] = None
    noise: Optional[NoiseSpec] = None

    def __post_init__(self):
        if not np.isfinite(self.x0):
            raise ValueError("initial state must be finite")


@dataclass(frozen=True)
class ObservationSeries:
    """Volatility proxies ``y`` and covariate estimates ``xhat`` (shape (n, q))."""

    grid: UniformGrid
    y: np.ndarray
    xhat: np.ndarray
    kind: ModelKind = ModelKind.LOCAL_VOL

    def __post_init__(self):
        y = _readonly(self.y)
        xhat = np.array(self.xhat, dtype=float)
        if xhat.ndim == 1:
            xhat = xhat[:, None]
        xhat.setflags(write=False)
        n = self.grid.n
        if y.shape != (n,) or xhat.shape[0] != n:
            raise ValueError(f"series length mismatch: grid n={n}, y {y.shape}, xhat {xhat.shape}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(xhat))):
            raise NonFiniteError("observation series contains non-finite values")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "xhat", xhat)
        object.__setattr__(self, "kind", ModelKind(self.kind))

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def t(self) -> np.ndarray:
        return self.grid.left_times

    @property
    def covariates(self) -> np.ndarray:
        """Covariates component-major, shape (q, n), as model handles expect."""
        return self.xhat.T


@dataclass(frozen=True)
class NormalisedSeries:
    grid: UniformGrid
    z: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", _readonly(self.z))
        object.__setattr__(self, "theta", _readonly(np.atleast_1d(self.theta)))


def model_moments(series: ObservationSeries, model: ParametricVolModel, theta):
    """Return ``(mu, sigma)`` of the model on the series' grid."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    t, x = series.t, series.covariates
    with np.errstate(all="ignore"):
        mu = np.broadcast_to(np.asarray(model.mu(theta, t, x), dtype=float), t.shape)
        s2 = np.broadcast_to(np.asarray(model.sigma2(theta, t, x), dtype=float), t.shape)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(s2))):
        raise NonFiniteError("model mean or variance is not finite on the grid")
    if np.any(s2 <= 0):
        i = int(np.argmax(s2 <= 0))
        raise NonPositiveVarianceError(f"sigma2 = {s2[i]!r} <= 0 at t = {t[i]!r}")
    return mu, np.sqrt(s2)


def normalise(series: ObservationSeries, model: ParametricVolModel, theta) -> NormalisedSeries:
    """Map observations to ``Z_i = (Y_i - mu_i) / sigma_i`` under parameter theta."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (model.param_dim,):
        raise ValueError(f"theta has shape {theta.shape}, model expects ({model.param_dim},)")
    if not np.all(np.isfinite(theta)):
        raise NonFiniteError("theta is not finite")
    if not model.contains(theta):
        raise ValueError(f"theta {theta} outside parameter bounds")
    if not (np.all(np.isfinite(series.y)) and np.all(np.isfinite(series.xhat))):
        raise NonFiniteError("observation series contains non-finite values")
    mu, sigma = model_moments(series, model, theta)
    return NormalisedSeries(series.grid, (series.y - mu) / sigma, theta)
