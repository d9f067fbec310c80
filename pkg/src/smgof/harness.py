"""Monte Carlo driver for rejection-probability experiments."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import catalogue
from .errors import SmgofError
from .expr import SdeHandle
from .model import FineGrid, ModelKind, ObservationSeries, ParametricVolModel, SdeSpec, UniformGrid
from .observers import TruncationRule, constant_model, observe, proportional_model
from .simulate import PathRecord, SimConfig, seeds_for, simulate, simulate_latent_vol_pair
from .testing import NullSimulator, bootstrap_distribution
from .wavelet import gumbel_quantile, max_statistic_array, resolution_level

DEFAULT_X0 = 1.0


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: ModelKind
    null_model: ParametricVolModel
    dynamics: SdeSpec
    n: int
    alpha_levels: tuple = catalogue.ALPHAS
    mc_reps: int = 1000
    bootstrap_reps: int = 1000
    base_seed: int = 0
    vol_dynamics: Optional[SdeSpec] = None  # latent variance for stochastic volatility
    rule: Optional[TruncationRule] = None
    substeps: int = 10
    reference: Optional[tuple] = None  # published rates per alpha level, if any

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "alpha_levels", tuple(float(a) for a in self.alpha_levels))
        if self.mc_reps < 1:
            raise ValueError("mc_reps must be >= 1")
        if self.bootstrap_reps < 50:
            raise ValueError("bootstrap_reps must be >= 50")
        if not all(0 < a < 1 for a in self.alpha_levels):
            raise ValueError("alpha levels must lie in (0, 1)")
        if self.kind is ModelKind.STOCH_VOL and self.vol_dynamics is None:
            raise ValueError("stochastic-volatility scenarios need vol_dynamics")
        if self.kind is ModelKind.MICROSTRUCTURE and self.dynamics.noise is None:
            raise ValueError("microstructure scenarios need a noise description")


@dataclass
class ScenarioResult:
    scenario: Scenario
    rejection_rate: tuple
    mc_standard_error: tuple
    fail_count: int
    wall_time: float
    decisions: np.ndarray = field(repr=False)  # (mc_reps, n_alpha); NaN marks failed replications

    @property
    def valid_reps(self) -> int:
        return int(np.sum(~np.isnan(self.decisions[:, 0]))) if self.decisions.size else 0


def simulate_path(kind: ModelKind, dynamics: SdeSpec, n: int, cfg: SimConfig,
                  vol_dynamics: Optional[SdeSpec] = None) -> PathRecord:
    """Raw path on the grid the observer for ``kind`` expects."""
    kind = ModelKind(kind)
    if kind is ModelKind.STOCH_VOL:
        return simulate_latent_vol_pair(dynamics, vol_dynamics, FineGrid(n), cfg)
    return simulate(dynamics, FineGrid(n) if kind.fine else UniformGrid(n), cfg)


def simulate_observations(s: Scenario, seed: int) -> ObservationSeries:
    """One draw of the scenario's true dynamics pushed through its observer."""
    path = simulate_path(s.kind, s.dynamics, s.n, SimConfig(seed, s.substeps), s.vol_dynamics)
    return observe(path, s.kind, s.rule)


def run_replication(s: Scenario, seed: int):
    """Bootstrap decisions at every alpha level for one replication, or None on failure."""
    data_seed, boot_seed = seeds_for(seed, 2)
    try:
        series = simulate_observations(s, data_seed)
        null = NullSimulator.for_series(series, s.null_model, s.rule, s.substeps)
        dist = bootstrap_distribution(series, s.null_model, null, s.bootstrap_reps, boot_seed)
    except SmgofError:
        return None
    return [dist.reject(a) for a in s.alpha_levels]


def _map(fn, args, parallelism):
    if parallelism is None or parallelism == 1:
        return [fn(*a) for a in args]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=parallelism)(delayed(fn)(*a) for a in args)


def run_scenario(s: Scenario, parallelism: int = 1) -> ScenarioResult:
    start = time.perf_counter()
    seeds = seeds_for(s.base_seed, s.mc_reps)
    outcomes = _map(run_replication, [(s, sd) for sd in seeds], parallelism)
    decisions = np.full((s.mc_reps, len(s.alpha_levels)), np.nan)
    for i, out in enumerate(outcomes):
        if out is not None:
            decisions[i] = out
    return summarise(s, decisions, time.perf_counter() - start)


def summarise(s: Scenario, decisions: np.ndarray, wall_time: float) -> ScenarioResult:
    ok = ~np.isnan(decisions[:, 0])
    valid = int(ok.sum())
    if valid:
        rates = tuple(float(r) for r in decisions[ok].mean(axis=0))
        ses = tuple(math.sqrt(r * (1 - r) / valid) for r in rates)
    else:
        rates = ses = tuple(math.nan for _ in s.alpha_levels)
    return ScenarioResult(s, rates, ses, s.mc_reps - valid, wall_time, decisions)


# the local-volatility grid -----------------------------------------------------

def scaled_reps(scale: float):
    if not 0 < scale <= 1:
        raise ValueError("scale must lie in (0, 1]")
    return max(1, round(1000 * scale)), max(50, round(1000 * scale))


def table1_scenarios(scale: float = 1.0, base_seed: int = 0, ns: Sequence[int] = catalogue.NS,
                     select: Optional[Callable] = None, x0: float = DEFAULT_X0, substeps: int = 10):
    """Every catalogue row at every sample size, rep counts rescaled from 1000/1000."""
    mc, boot = scaled_reps(scale)
    grid = [(row, n) for row in catalogue.TABLE1 for n in catalogue.NS]
    seeds = seeds_for(base_seed, len(grid))
    out = []
    for (row, n), seed in zip(grid, seeds):
        if n not in ns or (select is not None and not select(row)):
            continue
        null = constant_model() if row.null == "constant" else proportional_model()
        dynamics = SdeSpec(SdeHandle(row.drift), SdeHandle(row.loading), x0)
        ref = tuple(row.reference_rate(n, a) for a in catalogue.ALPHAS)
        out.append(Scenario(row.name, ModelKind.LOCAL_VOL, null, dynamics, n, catalogue.ALPHAS, mc, boot, seed,
                            substeps=substeps, reference=ref))
    return out


def table1_suite(scale: float = 1.0, base_seed: int = 0, parallelism: int = 1, ns=catalogue.NS,
                 select: Optional[Callable] = None, progress: Optional[Callable] = None):
    results = []
    for s in table1_scenarios(scale, base_seed, ns, select):
        results.append(run_scenario(s, parallelism))
        if progress is not None:
            progress(results[-1])
    return results


def format_table(results: Sequence[ScenarioResult]) -> str:
    """Rows grouped by block, one column per (n, alpha), observed (reference)."""
    cols = sorted({(r.scenario.n, a) for r in results for a in r.scenario.alpha_levels})
    cells, order = {}, []
    for r in results:
        block, _, label = r.scenario.name.partition(" | ")
        key = (block, label or block)
        if key not in cells:
            cells[key] = {}
            order.append(key)
        for i, a in enumerate(r.scenario.alpha_levels):
            ref = r.scenario.reference[i] if r.scenario.reference else None
            text = f"{r.rejection_rate[i]:.3f}"
            cells[key][(r.scenario.n, a)] = text + (f" ({ref:.3f})" if ref is not None else "")
    width = max([len(v) for c in cells.values() for v in c.values()] + [8])
    lead = max([len(k[1]) + 2 for k in order] + [10])
    lines = [" " * lead + "".join(f"{f'n={n} a={a:g}':>{width + 2}}" for n, a in cols)]
    current = None
    for block, label in order:
        if block != current:
            lines.append(block)
            current = block
        row = cells[(block, label)]
        lines.append(f"  {label:<{lead - 2}}" + "".join(f"{row.get(c, '-'):>{width + 2}}" for c in cols))
    return "\n".join(lines) + "\n"


CSV_COLUMNS = ("scenario", "n", "alpha", "rejectionRate", "mcStandardError", "failCount", "wallTimeSec")


def results_csv(results: Sequence[ScenarioResult], header_lines: Sequence[str] = (), timing: bool = False) -> str:
    """CSV table; ``wallTimeSec`` is left empty unless ``timing`` is set so
    that reruns are byte-identical."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        for i, a in enumerate(r.scenario.alpha_levels):
            w.writerow([
                r.scenario.name, r.scenario.n, repr(a), f"{r.rejection_rate[i]:.17g}",
                f"{r.mc_standard_error[i]:.17g}", r.fail_count, f"{r.wall_time:.3f}" if timing else "",
            ])
    return buf.getvalue()


# detection-rate experiments -------------------------------------------------------

def bump_signal(n: int, amplitude: float) -> np.ndarray:
    """Box of height ``amplitude`` on the finest dyadic cell starting at t = 1/2."""
    J = resolution_level(n)
    m = 1 << J
    cell = (m * np.arange(n)) // n
    return amplitude * (cell == m // 2)


def detection_amplitude(c: float, n: int) -> float:
    return c * n**-0.25 * math.sqrt(math.log(n))


def detection_rate_sweep(c: float, ns: Sequence[int], reps: int, seed: int, alpha: float = 0.05,
                         chunk: int = 250) -> dict:
    """Power of the asymptotic test against ``Z_i = s(t_i) + N(0, 1)`` per n.

    ``s`` is :func:`bump_signal` with amplitude ``c n**-1/4 log(n)**1/2``.
    With ``c = 0`` this is the size of the asymptotic test.
    """
    if c < 0:
        raise ValueError("c must be nonnegative")
    power = {}
    for n in ns:
        rng = np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), n]))
        J = resolution_level(n)
        q = gumbel_quantile(J, alpha)
        signal = bump_signal(n, detection_amplitude(c, n))
        rejects = 0
        for lo in range(0, reps, chunk):
            z = signal + rng.standard_normal((min(chunk, reps - lo), n))
            rejects += int(np.sum(math.sqrt(n) * max_statistic_array(z, J) > q))
        power[n] = rejects / reps
    return power
