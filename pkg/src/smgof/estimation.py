"""Least-squares estimation of the null-model parameter."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import NoConvergenceError, NonFiniteError, SingularDesignError
from .model import ObservationSeries, ParametricVolModel

GRADIENT_TOL = 1e-8
N_STARTS = 8


@dataclass(frozen=True)
class FitResult:
    theta: np.ndarray
    rss: float
    method: str  # "closed_form_linear" or "iterative"
    converged: bool
    iterations: int


def residual_sum_of_squares(series: ObservationSeries, model: ParametricVolModel, theta) -> float:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    with np.errstate(all="ignore"):
        mu = np.asarray(model.mu(theta, series.t, series.covariates), dtype=float)
    r = series.y - mu
    return float(r @ r)


def _closed_form(series: ObservationSeries, model: ParametricVolModel) -> FitResult:
    design = np.asarray(model.basis(series.t, series.covariates), dtype=float)
    design = design.reshape(series.n, model.param_dim)
    if not np.all(np.isfinite(design)):
        raise NonFiniteError("design matrix is not finite")
    theta, _, rank, _ = np.linalg.lstsq(design, series.y, rcond=None)
    if rank < model.param_dim:
        raise SingularDesignError(f"design matrix has rank {rank} < {model.param_dim}")
    iterations = 0
    if not model.contains(theta):
        res = optimize.lsq_linear(design, series.y, bounds=(model.bounds[:, 0], model.bounds[:, 1]))
        theta, iterations = res.x, int(res.nit)
    r = series.y - design @ theta
    return FitResult(theta, float(r @ r), "closed_form_linear", True, iterations)


def fd_gradient(f, theta: np.ndarray) -> np.ndarray:
    """Central differences with step ``1e-6 * (1 + |theta_k|)``."""
    g = np.empty_like(theta)
    for k in range(theta.size):
        h = 1e-6 * (1.0 + abs(theta[k]))
        e = np.zeros_like(theta)
        e[k] = h
        g[k] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


def _projected(g, theta, bounds):
    g = g.copy()
    g[(theta <= bounds[:, 0]) & (g > 0)] = 0.0
    g[(theta >= bounds[:, 1]) & (g < 0)] = 0.0
    return g


def start_points(bounds: np.ndarray, count: int = N_STARTS) -> np.ndarray:
    """Deterministic coarse grid of starting points inside the box."""
    p = bounds.shape[0]
    lo, hi = bounds[:, 0], bounds[:, 1]
    if p == 1:
        u = ((np.arange(count) + 0.5) / count)[:, None]
    else:
        from scipy.stats import qmc

        u = qmc.Halton(d=p, scramble=False).random(count + 1)[1:]
    return lo + u * (hi - lo)


def _iterative(series: ObservationSeries, model: ParametricVolModel) -> FitResult:
    def rss(theta):
        v = residual_sum_of_squares(series, model, theta)
        return v if np.isfinite(v) else np.inf

    bounds = model.bounds
    scipy_bounds = list(map(tuple, bounds))
    legs = []
    total_iter = 0
    for x0 in start_points(bounds):
        try:
            res = optimize.minimize(
                rss, x0, jac=lambda th: fd_gradient(rss, th), method="L-BFGS-B", bounds=scipy_bounds,
                options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-12},
            )
        except (ValueError, FloatingPointError):
            continue
        total_iter += int(res.nit)
        theta = np.clip(res.x, bounds[:, 0], bounds[:, 1])
        value = rss(theta)
        if not np.isfinite(value):
            continue
        g = _projected(fd_gradient(rss, theta), theta, bounds)
        if np.max(np.abs(g)) > GRADIENT_TOL * max(1.0, value):
            # a Gauss-Newton polish usually closes the last few digits
            pol = optimize.least_squares(
                lambda th: series.y - model.mu(th, series.t, series.covariates), theta,
                bounds=(bounds[:, 0], bounds[:, 1]), xtol=1e-15, ftol=1e-15, gtol=1e-15,
            )
            total_iter += int(pol.nfev)
            cand = np.clip(pol.x, bounds[:, 0], bounds[:, 1])
            if rss(cand) <= value:
                theta, value = cand, rss(cand)
                g = _projected(fd_gradient(rss, theta), theta, bounds)
        ok = np.max(np.abs(g)) <= GRADIENT_TOL * max(1.0, value)
        legs.append((value, theta, ok))
    good = [leg for leg in legs if leg[2]]
    if not good:
        raise NoConvergenceError(f"no start out of {N_STARTS} met the gradient tolerance")
    best = min(v for v, _, _ in good)
    tied = [th for v, th, _ in good if v <= best + 1e-10 * max(1.0, abs(best))]
    theta = min(tied, key=lambda th: float(np.linalg.norm(th)))
    return FitResult(theta, rss(theta), "iterative", True, total_iter)


def fit_least_squares(series: ObservationSeries, model: ParametricVolModel,
                      method: str | None = None) -> FitResult:
    """Minimise ``sum (Y_i - mu(theta, t_i, Xhat_i))**2`` over the parameter box.

    Models declaring a linear ``basis`` are solved in closed form unless
    ``method="iterative"`` is forced.
    """
    if series.n < model.param_dim:
        raise SingularDesignError("fewer observations than parameters")
    if method is None:
        method = "closed_form_linear" if model.is_linear else "iterative"
    if method == "closed_form_linear":
        if not model.is_linear:
            raise ValueError("closed form needs a model with a linear basis")
        return _closed_form(series, model)
    if method == "iterative":
        return _iterative(series, model)
    raise ValueError(f"unknown method {method!r}")
