"""Euler-Maruyama simulation of diffusions, jump-diffusions, latent
volatility pairs and noisy fine-grid observations.

Every public simulator has a batch form (suffix ``_paths``) returning an
array of shape ``(n_paths, n_times, d)``; the single-path forms wrap the
batch form with ``n_paths=1`` and return a :class:`PathRecord`.

Randomness is drawn from independent child streams of
``SeedSequence(cfg.seed)``: stream 0 drives the first Brownian motion,
stream 1 the second, stream 2 the jumps and stream 3 the noise. Switching
jumps off therefore leaves the Brownian path untouched.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import BlockMisalignedError, NonFiniteError
from .model import FineGrid, NoiseSpec, SdeSpec, UniformGrid

_BROWNIAN, _BROWNIAN2, _JUMPS, _NOISE = range(4)
_BLOCK = 2048


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    euler_substeps: int = 10
    scheme: str = "euler_maruyama"

    def __post_init__(self):
        if self.euler_substeps < 1:
            raise ValueError("euler_substeps must be >= 1")
        if self.scheme != "euler_maruyama":
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def streams(self):
        return [np.random.default_rng(s) for s in np.random.SeedSequence(int(self.seed) & (2**64 - 1)).spawn(4)]


@dataclass(frozen=True)
class PathRecord:
    """A discretely observed path: ``states[i]`` is the state at ``grid.times[i]``."""

    grid: Union[UniformGrid, FineGrid]
    states: np.ndarray
    labels: tuple = ("x",)

    def __post_init__(self):
        s = np.array(self.states, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.shape != (self.grid.size, len(self.labels)):
            raise ValueError(f"states shape {s.shape} does not match grid/labels")
        if not np.all(np.isfinite(s)):
            raise NonFiniteError("path contains non-finite states")
        s.setflags(write=False)
        object.__setattr__(self, "states", s)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def component(self, k: int = 0) -> np.ndarray:
        return self.states[:, k]


def euler_maruyama(drifts, loadings, x0, dw, dt, record_every=1, jumps=None, t0=0.0):
    """Integrate a d-dimensional system with explicit Brownian increments.

    Parameters
    ----------
    drifts, loadings : sequence of callables
        One ``(t, x) -> array`` handle per component; ``x`` has shape
        ``(d, n_paths)``. A ``None`` handle means zero.
    x0 : array_like, shape (d,) or (d, n_paths)
    dw : ndarray, shape (steps, d, n_paths)
        Brownian increments (already scaled by ``sqrt(dt)``).
    record_every : int
        Store the state after every ``record_every`` steps.
    jumps : ndarray, shape (steps, n_paths), optional
        Jump sizes added to component 0 at the end of each step.

    Returns
    -------
    ndarray, shape (steps // record_every + 1, d, n_paths)
    """
    steps, d, n_paths = dw.shape
    x = np.empty((d, n_paths))
    x[...] = np.asarray(x0, dtype=float).reshape(d, -1)
    out = np.empty((steps // record_every + 1, d, n_paths))
    out[0] = x
    terms = [(c, drifts[c], loadings[c]) for c in range(d)]
    inc = np.zeros((d, n_paths))
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            t = t0 + k * dt
            # all components are evaluated at the left point before any update
            for c, b, g in terms:
                inc[c] = 0.0 if g is None else g(t, x) * dw[k, c]
                if b is not None:
                    inc[c] += b(t, x) * dt
            x += inc
            if jumps is not None:
                x[0] += jumps[k]
            if (k + 1) % record_every == 0:
                if not np.isfinite(x).all():
                    raise NonFiniteError(f"state became non-finite at t = {t + dt:.6g}")
                out[(k + 1) // record_every] = x
    return out


def _jump_sizes(spec: SdeSpec, rng, steps, n_paths, dt):
    counts = rng.poisson(spec.jump.intensity * dt, size=(steps, n_paths))
    total = int(counts.sum())
    if total == 0:
        return np.zeros((steps, n_paths))
    sizes = np.asarray(spec.jump.size_sampler(rng, total), dtype=float)
    cell = np.repeat(np.arange(steps * n_paths), counts.ravel())
    return np.bincount(cell, weights=sizes, minlength=steps * n_paths).reshape(steps, n_paths)


def _simulate(drifts, loadings, x0, intervals, cfg: SimConfig, n_paths, jump_spec=None):
    rngs = cfg.streams()
    d = len(drifts)
    m = cfg.euler_substeps
    total = intervals * m
    dt = 1.0 / total
    sqrt_dt = np.sqrt(dt)
    out = np.empty((intervals + 1, d, n_paths))
    out[0] = np.asarray(x0, dtype=float).reshape(d, 1)
    state = out[0]
    # blocks are whole observation intervals so recording stays aligned
    block = max(m, (_BLOCK // m) * m)
    done = 0
    while done < total:
        steps = min(block, total - done)
        dw = np.empty((steps, d, n_paths))
        for c in range(d):
            dw[:, c, :] = rngs[c].standard_normal((steps, n_paths)) * sqrt_dt
        jumps = None
        if jump_spec is not None and jump_spec.jump is not None and jump_spec.jump.intensity > 0:
            jumps = _jump_sizes(jump_spec, rngs[_JUMPS], steps, n_paths, dt)
        rec = euler_maruyama(drifts, loadings, state, dw, dt, m, jumps, t0=done * dt)
        first = done // m
        out[first + 1 : first + rec.shape[0]] = rec[1:]
        state = rec[-1]
        done += steps
    return np.transpose(out, (2, 0, 1))


def simulate_diffusion_paths(spec: SdeSpec, grid, cfg: SimConfig, n_paths: int = 1) -> np.ndarray:
    """Batch Euler paths of ``spec`` on ``grid``; jumps in ``spec`` are ignored."""
    return _simulate([spec.drift], [spec.diffusion], [spec.x0], _intervals(grid), cfg, n_paths)


def simulate_jump_diffusion_paths(spec: SdeSpec, grid, cfg: SimConfig, n_paths: int = 1) -> np.ndarray:
    if spec.jump is None:
        raise ValueError("simulate_jump_diffusion needs a jump description")
    return _simulate([spec.drift], [spec.diffusion], [spec.x0], _intervals(grid), cfg, n_paths, spec)


def _price_loading(t, x):
    return np.sqrt(np.maximum(x[1], 0.0))


def simulate_latent_vol_pair_paths(price_spec: SdeSpec, vol_spec: SdeSpec, grid, cfg: SimConfig,
                                   n_paths: int = 1) -> np.ndarray:
    """Joint ``(X1, X2)`` paths where X1 has local variance ``max(X2, 0)``.

    ``price_spec.diffusion`` is not used; both specs' handles see the joint
    state ``x`` with ``x[0] = X1`` and ``x[1] = X2``.
    """
    return _simulate(
        [price_spec.drift, vol_spec.drift],
        [_price_loading, vol_spec.diffusion],
        [price_spec.x0, vol_spec.x0],
        _intervals(grid),
        cfg,
        n_paths,
    )


def _intervals(grid) -> int:
    return grid.intervals if isinstance(grid, FineGrid) else grid.n


def _standard_noise(noise: NoiseSpec, rng, shape):
    if noise.kappa is None:
        return rng.standard_normal(shape)
    df = noise.kappa + 1.0
    return rng.standard_t(df, shape) * np.sqrt((df - 2.0) / df)


def add_microstructure_noise_paths(paths: np.ndarray, noise: NoiseSpec, grid: FineGrid,
                                   cfg: SimConfig) -> np.ndarray:
    """Return ``(X1 + eps, v)`` for a batch of fine-grid paths.

    ``noise.variance(t, x)`` is evaluated at each fine time with
    ``x`` the path state, component-major.
    """
    paths = np.asarray(paths, dtype=float)
    if paths.shape[1] != grid.size:
        raise BlockMisalignedError(f"expected {grid.size} fine points, got {paths.shape[1]}")
    t = grid.times
    x = np.moveaxis(paths, 2, 0)  # (d, n_paths, n_times)
    v = np.broadcast_to(np.asarray(noise.variance(t, x), dtype=float), paths.shape[:2])
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise NonFiniteError("noise variance must be finite and nonnegative")
    rng = cfg.streams()[_NOISE]
    eps = np.sqrt(v) * _standard_noise(noise, rng, paths.shape[:2])
    return np.stack([paths[..., 0] + eps, v], axis=-1)


# single-path wrappers ------------------------------------------------------

def simulate_diffusion(spec: SdeSpec, grid, cfg: SimConfig) -> PathRecord:
    return PathRecord(grid, simulate_diffusion_paths(spec, grid, cfg)[0], ("x",))


def simulate_jump_diffusion(spec: SdeSpec, grid, cfg: SimConfig) -> PathRecord:
    return PathRecord(grid, simulate_jump_diffusion_paths(spec, grid, cfg)[0], ("x",))


def simulate_latent_vol_pair(price_spec: SdeSpec, vol_spec: SdeSpec, grid: FineGrid,
                             cfg: SimConfig) -> PathRecord:
    states = simulate_latent_vol_pair_paths(price_spec, vol_spec, grid, cfg)[0]
    return PathRecord(grid, states, ("price", "spot_variance"))


def add_microstructure_noise(path: PathRecord, noise: NoiseSpec, cfg: SimConfig) -> PathRecord:
    if not isinstance(path.grid, FineGrid):
        raise BlockMisalignedError("microstructure noise needs a path on the fine grid")
    noisy = add_microstructure_noise_paths(path.states[None], noise, path.grid, cfg)[0]
    return PathRecord(path.grid, noisy, ("noisy_price", "noise_variance"))


def simulate(spec: SdeSpec, grid, cfg: SimConfig) -> PathRecord:
    """Dispatch on ``spec``: jump-diffusion if it has jumps, then add noise if present."""
    if spec.jump is not None:
        path = simulate_jump_diffusion(spec, grid, cfg)
    else:
        path = simulate_diffusion(spec, grid, cfg)
    if spec.noise is not None:
        path = add_microstructure_noise(path, spec.noise, cfg)
    return path


def seeds_for(base_seed: int, count: int, offset: int = 0) -> Sequence[int]:
    """Derive independent 64-bit seeds ``(base_seed, i)`` for ``i`` in a range."""
    return [
        int(np.random.SeedSequence([base_seed & (2**64 - 1), offset + i]).generate_state(1, np.uint64)[0])
        for i in range(count)
    ]
