import json
import math

import numpy as np
import pytest

from smgof.errors import BootstrapDegenerateError
from smgof.expr import SdeHandle
from smgof.model import FineGrid, ModelKind, NoiseSpec, ObservationSeries, SdeSpec, UniformGrid, normalise
from smgof.observers import constant_model, observe, proportional_model
from smgof.simulate import SimConfig, simulate, simulate_latent_vol_pair
from smgof.testing import (
    NullSimulator,
    asymptotic_test,
    bootstrap_distribution,
    bootstrap_test,
    gumbel_test_z,
    order_statistic_index,
)
from smgof.wavelet import gumbel_constants, max_statistic_array

from conftest import make_series
from oracles import exact_null_size


def local_vol_series(n=200, seed=0, diffusion="1", drift="0"):
    path = simulate(SdeSpec(SdeHandle(drift), SdeHandle(diffusion), 1.0), UniformGrid(n), SimConfig(seed))
    return observe(path, ModelKind.LOCAL_VOL)


def test_asymptotic_critical_value_n100():
    r = asymptotic_test(local_vol_series(100), constant_model(), 0.05)
    assert r.J == 3 and r.method == "asymptotic" and r.bootstrap_reps == 0
    assert r.critical_value == pytest.approx(3.0357, abs=1e-4)
    assert r.reject == (r.scaled_statistic > r.critical_value)
    assert r.scaled_statistic == pytest.approx(math.sqrt(100) * r.statistic)


def test_zero_signal_floor():
    r = gumbel_test_z(np.zeros(100))
    g = gumbel_constants(3)
    assert r.statistic == 0 and r.scaled_statistic == 0 and not r.reject
    assert r.p_value == pytest.approx(1 - math.exp(-math.exp(g.b / g.a)), rel=1e-12)


def test_asymptotic_preconditions():
    with pytest.raises(ValueError):
        asymptotic_test(make_series(np.ones(8)), constant_model())
    with pytest.raises(ValueError):
        asymptotic_test(local_vol_series(50), constant_model(), alpha=0.0)


def test_gaussian_null_size_matches_exact_oracle():
    n, reps = 1024, 2000
    z = np.random.default_rng(11).normal(size=(reps, n))
    J = 5
    rate = np.mean([gumbel_test_z(row).reject for row in z[:400]])
    full = np.mean(math.sqrt(n) * max_statistic_array(z, J) > gumbel_test_z(z[0]).critical_value)
    exact = exact_null_size(n, 0.05)
    assert abs(full - exact) < 3 * math.sqrt(exact * (1 - exact) / reps)
    assert rate == np.mean(math.sqrt(n) * max_statistic_array(z[:400], J) > gumbel_test_z(z[0]).critical_value)


def test_order_statistic_convention():
    assert order_statistic_index(0.05, 300) == 284
    assert order_statistic_index(0.1, 1000) == 899
    assert order_statistic_index(0.05, 1) == 0
    assert order_statistic_index(0.5, 3) == 1
    with pytest.raises(ValueError):
        order_statistic_index(0.05, 0)


class FixedSimulator:
    """Returns the series it was given, shifted by a seed-dependent amount."""

    def __init__(self, series):
        self.series = series

    def __call__(self, theta, seed):
        bump = (seed % 7) / 10
        return ObservationSeries(self.series.grid, self.series.y + bump * np.arange(self.series.n) / self.series.n,
                                 self.series.xhat, self.series.kind)


def test_single_bootstrap_replicate():
    s = local_vol_series(64, 3)
    dist = bootstrap_distribution(s, constant_model(), FixedSimulator(s), 1, seed=5)
    assert dist.simulated.size == 1
    assert dist.reject(0.05) == (dist.statistic > dist.simulated[0])
    assert dist.p_value() in (0.5, 1.0)


def test_bootstrap_report_fields_and_determinism():
    s = local_vol_series(200, 4)
    a = bootstrap_test(s, constant_model(), alpha=0.05, B=60, seed=9)
    b = bootstrap_test(s, constant_model(), alpha=0.05, B=60, seed=9)
    assert a.to_dict(timing=False) == b.to_dict(timing=False)
    assert a.method == "bootstrap" and a.bootstrap_reps == 60 and a.seeds == [9]
    assert a.reject == (a.statistic > a.critical_value)
    assert (a.p_value <= 0.05) == a.reject or a.p_value == pytest.approx(0.05, abs=1 / 61)
    assert a.metadata["euler_substeps"] == 10
    assert "wall_time" not in json.loads(a.to_json(timing=False))


def test_quantile_monotonicity():
    s = local_vol_series(200, 5, diffusion="1 + x")
    dist = bootstrap_distribution(s, constant_model(), None, 80, 1)
    levels = [0.01, 0.05, 0.1, 0.2, 0.5, 0.9]
    decisions = [dist.reject(a) for a in levels]
    assert decisions == sorted(decisions)
    z = np.random.default_rng(0).normal(size=256) * 1.3
    asym = [gumbel_test_z(z, a).reject for a in levels]
    assert asym == sorted(asym)


def test_scale_equivariance():
    s = local_vol_series(200, 6)
    model = constant_model()
    scaled = make_series(7.3 * s.y, s.xhat)
    ta, tb = asymptotic_test(s, model), asymptotic_test(scaled, model)
    assert tb.theta_hat[0] == pytest.approx(7.3 * ta.theta_hat[0], rel=1e-12)
    za = normalise(s, model, ta.theta_hat).z
    zb = normalise(scaled, model, tb.theta_hat).z
    assert np.allclose(za, zb, rtol=0, atol=1e-10)
    assert abs(ta.statistic - tb.statistic) < 1e-10 and ta.reject == tb.reject


def test_degenerate_bootstrap():
    s = local_vol_series(64, 7)

    def broken(theta, seed):
        # proportional design with zero covariate is singular
        return ObservationSeries(s.grid, s.y, np.zeros_like(s.xhat), s.kind)

    with pytest.raises(BootstrapDegenerateError):
        bootstrap_distribution(s, proportional_model(), broken, 50, 0)


def test_null_simulator_local_vol_starts_at_data():
    s = local_vol_series(100, 8)
    sim = NullSimulator.for_series(s, proportional_model())
    rep = sim([1.0], 3)
    assert rep.xhat[0, 0] == s.xhat[0, 0] and rep.n == 100
    y, xhat = sim.simulate_batch([1.0], 5, 3)
    assert y.shape == (5, 100) and np.all(xhat[:, 0, 0] == s.xhat[0, 0])
    again, _ = sim.simulate_batch([1.0], 5, 3)
    assert np.array_equal(y, again)


def test_null_simulator_microstructure_and_stoch_vol():
    n = 20
    noisy = simulate(SdeSpec(None, SdeHandle("1"), 1.0, noise=NoiseSpec(SdeHandle("0.0001"))), FineGrid(n),
                     SimConfig(1))
    ms = observe(noisy, ModelKind.MICROSTRUCTURE)
    model = constant_model(ModelKind.MICROSTRUCTURE)
    rep = NullSimulator.for_series(ms, model)([1.0], 2)
    assert rep.kind is ModelKind.MICROSTRUCTURE and rep.xhat.shape == (n, 2)
    r = bootstrap_test(ms, model, alpha=0.1, B=50, seed=3)
    assert 0 < r.p_value <= 1

    pair = simulate_latent_vol_pair(SdeSpec(None, None, 0.0), SdeSpec(None, SdeHandle("0.5"), 1.0), FineGrid(n),
                                    SimConfig(2))
    sv = observe(pair, ModelKind.STOCH_VOL)
    svm = constant_model(ModelKind.STOCH_VOL)
    rep = NullSimulator.for_series(sv, svm)([0.25], 4)
    assert rep.kind is ModelKind.STOCH_VOL
    assert bootstrap_test(sv, svm, alpha=0.1, B=50, seed=3).bootstrap_reps == 50


def test_null_simulator_zeroes_jumps_and_drift():
    n = 200
    path = simulate(SdeSpec(SdeHandle("5"), SdeHandle("1"), 1.0), UniformGrid(n), SimConfig(1))
    s = observe(path, ModelKind.JUMPS)
    y, xhat = NullSimulator.for_series(s, constant_model(ModelKind.JUMPS)).simulate_batch([1.0], 400, 2)
    drift = (xhat[:, -1, 0] - xhat[:, 0, 0]).mean()
    assert abs(drift) < 0.15
