"""Goodness-of-fit tests built on the Haar max statistic.

Two calibrations are provided: the asymptotic Gumbel critical value and a
parametric bootstrap that resimulates the fitted null with drift and jumps
switched off.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import BootstrapDegenerateError, SmgofError
from .estimation import fit_least_squares
from .model import FineGrid, ModelKind, NoiseSpec, ObservationSeries, ParametricVolModel, SdeSpec, UniformGrid, normalise
from .observers import TruncationRule, observe_batch
from .simulate import (
    SimConfig,
    add_microstructure_noise_paths,
    seeds_for,
    simulate_diffusion_paths,
    simulate_latent_vol_pair_paths,
)
from .wavelet import decompose, gumbel_pvalue, gumbel_quantile, max_statistic, max_statistic_array, resolution_level

MIN_ASYMPTOTIC_N = 16
MAX_FAILURE_RATE = 0.10


@dataclass
class TestReport:
    statistic: float
    scaled_statistic: float
    critical_value: float
    p_value: float
    reject: bool
    alpha: float
    method: str
    theta_hat: list
    n: int
    J: int
    seeds: list = field(default_factory=list)
    bootstrap_reps: int = 0
    failed_reps: int = 0
    metadata: dict = field(default_factory=dict)
    wall_time: Optional[float] = None

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("wall_time")
        return d

    def to_json(self, timing: bool = True, **kwargs) -> str:
        return json.dumps(self.to_dict(timing), **kwargs)


def _fit_statistic(series: ObservationSeries, model: ParametricVolModel, J: int, fit_method=None):
    fit = fit_least_squares(series, model, fit_method)
    zs = normalise(series, model, fit.theta)
    return max_statistic(decompose(zs, J)), fit.theta


def gumbel_test_z(z, alpha: float = 0.05, theta=()) -> TestReport:
    """Asymptotic test applied directly to normalised observations ``z``."""
    z = np.asarray(z, dtype=float)
    n = z.size
    J = resolution_level(n)
    stat = max_statistic(decompose(z, J))
    return _gumbel_report(stat, n, J, alpha, list(np.atleast_1d(theta).astype(float)))


def _gumbel_report(stat, n, J, alpha, theta):
    scaled = math.sqrt(n) * stat
    q = gumbel_quantile(J, alpha)
    return TestReport(stat, scaled, q, gumbel_pvalue(scaled, J), bool(scaled > q), alpha, "asymptotic",
                      [float(v) for v in theta], n, J)


def asymptotic_test(series: ObservationSeries, model: ParametricVolModel, alpha: float = 0.05,
                    fit_method=None) -> TestReport:
    """Reject when ``sqrt(n) * T_hat(theta_hat)`` exceeds the Gumbel quantile."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if series.n < MIN_ASYMPTOTIC_N:
        raise ValueError(f"asymptotic test needs n >= {MIN_ASYMPTOTIC_N}")
    start = time.perf_counter()
    J = resolution_level(series.n)
    stat, theta = _fit_statistic(series, model, J, fit_method)
    report = _gumbel_report(stat, series.n, J, alpha, theta)
    report.wall_time = time.perf_counter() - start
    return report


# null simulation ------------------------------------------------------------

class _NullLoading:
    """Brownian loading ``sqrt(max(mu(theta, t, x), 0))`` of the null model."""

    def __init__(self, model, theta, extra=None):
        self.model, self.theta, self.extra = model, np.atleast_1d(theta), extra

    def __call__(self, t, x):
        if self.extra is not None:
            x = (x[0], np.broadcast_to(self.extra(t), np.shape(x[0])))
        mu = np.asarray(self.model.mu(self.theta, t, x), dtype=float)
        return np.sqrt(np.maximum(mu, 0.0))


class _BlockValue:
    """Piecewise-constant function of time taking ``values[j]`` on block j."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def __call__(self, t, x=None):
        n = self.values.size
        j = np.minimum(np.floor(np.asarray(t) * n).astype(int), n - 1)
        return self.values[j]


class NullSimulator:
    """Simulate observation series from the fitted null model.

    Drift and jump components are set to zero; the volatility-like process
    follows ``mu(theta, t, X)``. Paths start at the first covariate estimate
    of the observed series. For microstructure data the noise variance is
    held at the observed block estimates ``Xhat_2``.
    """

    def __init__(self, model: ParametricVolModel, kind: ModelKind, n: int, start, noise_variance=None,
                 rule: TruncationRule | None = None, substeps: int = 10):
        self.model = model
        self.kind = ModelKind(kind)
        self.n = int(n)
        self.start = np.atleast_1d(np.asarray(start, dtype=float))
        self.noise_variance = None if noise_variance is None else np.asarray(noise_variance, dtype=float)
        self.rule = rule
        self.substeps = substeps

    @classmethod
    def for_series(cls, series: ObservationSeries, model: ParametricVolModel, rule=None, substeps=10):
        noise = series.xhat[:, 1] if series.kind is ModelKind.MICROSTRUCTURE else None
        return cls(model, series.kind, series.n, series.xhat[0], noise, rule, substeps)

    def simulate_batch(self, theta, count: int, seed: int):
        """Return ``(y, xhat)`` arrays of shapes ``(count, n)`` and ``(count, n, q)``."""
        cfg = SimConfig(seed, self.substeps)
        kind, n = self.kind, self.n
        if kind in (ModelKind.LOCAL_VOL, ModelKind.JUMPS):
            spec = SdeSpec(None, _NullLoading(self.model, theta), float(self.start[0]))
            paths = simulate_diffusion_paths(spec, UniformGrid(n), cfg, count)[..., 0]
        elif kind is ModelKind.MICROSTRUCTURE:
            grid = FineGrid(n)
            v = _BlockValue(self.noise_variance)
            spec = SdeSpec(None, _NullLoading(self.model, theta, v), float(self.start[0]))
            clean = simulate_diffusion_paths(spec, grid, cfg, count)
            paths = add_microstructure_noise_paths(clean, NoiseSpec(v), grid, cfg)[..., 0]
        else:
            price = SdeSpec(None, None, float(self.start[0]))
            vol = SdeSpec(None, _NullLoading(self.model, theta), float(self.start[1]))
            paths = simulate_latent_vol_pair_paths(price, vol, FineGrid(n), cfg, count)[..., 0]
        return observe_batch(paths, kind, self.rule)

    def __call__(self, theta, seed: int) -> ObservationSeries:
        y, xhat = self.simulate_batch(theta, 1, seed)
        return ObservationSeries(UniformGrid(self.n), y[0], xhat[0], self.kind)


# bootstrap ------------------------------------------------------------------

@dataclass
class BootstrapDistribution:
    statistic: float
    theta_hat: np.ndarray
    simulated: np.ndarray  # sorted statistics of the successful replications
    failed: int
    J: int

    def critical_value(self, alpha: float) -> float:
        return float(self.simulated[order_statistic_index(alpha, self.simulated.size)])

    def reject(self, alpha: float) -> bool:
        return bool(self.statistic > self.critical_value(alpha))

    def p_value(self) -> float:
        exceed = self.simulated.size - np.searchsorted(self.simulated, self.statistic, side="left")
        return float((1 + exceed) / (self.simulated.size + 1))


def order_statistic_index(alpha: float, B: int) -> int:
    """Zero-based index of the ``ceil((1 - alpha) B)``-th order statistic.

    ``alpha`` is read through its decimal repr so that, e.g., 0.05 * 300
    lands on 285 rather than 286.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if B < 1:
        raise ValueError("need at least one bootstrap statistic")
    k = math.ceil((1 - Fraction(repr(float(alpha)))) * B)
    return max(k, 1) - 1


def bootstrap_distribution(series: ObservationSeries, model: ParametricVolModel,
                           null_simulator: Callable | None, B: int, seed: int,
                           rule: TruncationRule | None = None, fit_method=None) -> BootstrapDistribution:
    """Statistic on the data plus ``B`` statistics resimulated under the fitted null."""
    if B < 1:
        raise ValueError("B must be >= 1")
    J = resolution_level(series.n)
    stat, theta = _fit_statistic(series, model, J, fit_method)
    if null_simulator is None:
        null_simulator = NullSimulator.for_series(series, model, rule)
    if hasattr(null_simulator, "simulate_batch"):
        y, xhat = null_simulator.simulate_batch(theta, B, seed)
        replicates = ((y[j], xhat[j]) for j in range(B))
    else:
        replicates = (null_simulator(theta, s) for s in seeds_for(seed, B))
    sims = []
    for rep in replicates:
        try:
            if not isinstance(rep, ObservationSeries):
                rep = ObservationSeries(series.grid, rep[0], rep[1], series.kind)
            sims.append(_fit_statistic(rep, model, J, fit_method)[0])
        except SmgofError:
            continue
    failed = B - len(sims)
    if failed > MAX_FAILURE_RATE * B:
        raise BootstrapDegenerateError(f"{failed} of {B} bootstrap replications failed")
    return BootstrapDistribution(stat, theta, np.sort(np.asarray(sims)), failed, J)


def bootstrap_test(series: ObservationSeries, model: ParametricVolModel, null_simulator: Callable | None = None,
                   alpha: float = 0.05, B: int = 1000, seed: int = 0, rule: TruncationRule | None = None,
                   fit_method=None) -> TestReport:
    """Reject when ``T_hat(theta_hat)`` exceeds the bootstrap ``(1 - alpha)`` quantile.

    ``null_simulator(theta, seed)`` must return an :class:`ObservationSeries`
    drawn from the null with parameter ``theta``; objects that also provide
    ``simulate_batch(theta, count, seed)`` are driven through that instead.
    Defaults to :class:`NullSimulator` built from the data.
    """
    start = time.perf_counter()
    order_statistic_index(alpha, 1)
    dist = bootstrap_distribution(series, model, null_simulator, B, seed, rule, fit_method)
    q = dist.critical_value(alpha)
    substeps = getattr(null_simulator, "substeps", 10 if null_simulator is None else None)
    return TestReport(
        statistic=dist.statistic,
        scaled_statistic=math.sqrt(series.n) * dist.statistic,
        critical_value=q,
        p_value=dist.p_value(),
        reject=bool(dist.statistic > q),
        alpha=alpha,
        method="bootstrap",
        theta_hat=[float(v) for v in dist.theta_hat],
        n=series.n,
        J=dist.J,
        seeds=[int(seed)],
        bootstrap_reps=B,
        failed_reps=dist.failed,
        metadata={"null_scheme": "euler_maruyama", "euler_substeps": substeps},
        wall_time=time.perf_counter() - start,
    )
