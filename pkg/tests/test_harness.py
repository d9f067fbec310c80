import math
import random

import numpy as np
import pytest

from smgof import catalogue
from smgof.expr import SdeHandle
from smgof.harness import (
    CSV_COLUMNS,
    Scenario,
    bump_signal,
    detection_rate_sweep,
    format_table,
    results_csv,
    run_replication,
    run_scenario,
    scaled_reps,
    summarise,
    table1_scenarios,
)
from smgof.model import ModelKind, SdeSpec
from smgof.observers import constant_model, proportional_model
from smgof.simulate import seeds_for

from oracles import exact_null_size


def small_scenario(**kw):
    args = dict(name="bm", kind=ModelKind.LOCAL_VOL, null_model=constant_model(),
                dynamics=SdeSpec(SdeHandle("0"), SdeHandle("1"), 1.0), n=100, alpha_levels=(0.05, 0.1),
                mc_reps=6, bootstrap_reps=50, base_seed=3)
    args.update(kw)
    return Scenario(**args)


def test_scenario_invariants():
    with pytest.raises(ValueError):
        small_scenario(bootstrap_reps=49)
    with pytest.raises(ValueError):
        small_scenario(mc_reps=0)
    with pytest.raises(ValueError):
        small_scenario(alpha_levels=(0.05, 1.0))
    with pytest.raises(ValueError):
        small_scenario(kind=ModelKind.STOCH_VOL)


def test_single_replication_rate_is_binary():
    r = run_scenario(small_scenario(mc_reps=1))
    assert all(v in (0.0, 1.0) for v in r.rejection_rate)


def test_reproducible_and_permutation_invariant():
    s = small_scenario()
    a, b = run_scenario(s), run_scenario(s)
    assert a.rejection_rate == b.rejection_rate and a.fail_count == b.fail_count
    assert np.array_equal(a.decisions, b.decisions)
    seeds = seeds_for(s.base_seed, s.mc_reps)
    order = list(range(s.mc_reps))
    random.Random(1).shuffle(order)
    shuffled = np.array([run_replication(s, seeds[i]) for i in order], dtype=float)
    c = summarise(s, shuffled, 0.0)
    assert c.rejection_rate == a.rejection_rate and c.mc_standard_error == a.mc_standard_error


def test_standard_error_recomputed_from_decisions():
    r = run_scenario(small_scenario(mc_reps=12, dynamics=SdeSpec(SdeHandle("x"), SdeHandle("1 + x"), 1.0)))
    for i in range(2):
        d = r.decisions[:, i]
        p = d.mean()
        assert r.rejection_rate[i] == p
        assert r.mc_standard_error[i] == pytest.approx(math.sqrt(p * (1 - p) / d.size), rel=1e-15)


def test_failed_replications_are_counted():
    # zero covariate makes the proportional design singular in every replication
    s = small_scenario(null_model=proportional_model(), dynamics=SdeSpec(SdeHandle("0"), SdeHandle("0"), 0.0),
                       mc_reps=3)
    r = run_scenario(s)
    assert r.fail_count == 3 and r.valid_reps == 0
    assert all(math.isnan(v) for v in r.rejection_rate)


def test_parallel_matches_serial():
    s = small_scenario(mc_reps=4)
    assert np.array_equal(run_scenario(s, parallelism=2).decisions, run_scenario(s).decisions)


def test_scaled_reps():
    assert scaled_reps(1.0) == (1000, 1000)
    assert scaled_reps(0.2) == (200, 200)
    assert scaled_reps(0.01) == (10, 50)
    with pytest.raises(ValueError):
        scaled_reps(1.5)


def test_catalogue_layout_and_references():
    assert len(catalogue.TABLE1) == 20
    assert len(table1_scenarios(0.2)) == 60
    blocks = [row.block for row in catalogue.TABLE1]
    assert [blocks.count(b) for b in dict.fromkeys(blocks)] == [5, 5, 5, 5]
    ref = lambda block, label, n, a: catalogue.find_row(block, label).reference_rate(n, a)
    assert ref(catalogue.CONSTANT_NULL, "b_t = 0", 100, 0.05) == 0.048
    assert ref(catalogue.CONSTANT_NULL, "b_t = 0", 200, 0.05) == 0.056
    assert ref(catalogue.CONSTANT_ALT, "sqrt(mu_t) = 1 + sin(5 X_t)", 200, 0.05) == 0.997
    assert ref(catalogue.CONSTANT_ALT, "sqrt(mu_t) = 1 + X_t exp(t)", 100, 0.05) == 0.954
    assert ref(catalogue.PROPORTIONAL_NULL, "b_t = 2", 500, 0.05) == 0.043
    assert ref(catalogue.PROPORTIONAL_ALT, "mu_t = 1", 500, 0.05) == 0.979


def test_catalogue_seeds_do_not_depend_on_filter():
    full = {(s.name, s.n): s.base_seed for s in table1_scenarios(0.2, 5)}
    part = table1_scenarios(0.2, 5, ns=(200,), select=lambda row: "sin(5 X_t)" in row.label)
    assert len(part) == 1 and part[0].base_seed == full[(part[0].name, 200)]


def test_catalogue_loadings():
    t = 0.3
    x = np.array([[0.4]])
    row = catalogue.find_row(catalogue.PROPORTIONAL_ALT, "mu_t = 5|X_t|^(3/2)")
    s = [sc for sc in table1_scenarios(0.05, ns=(100,)) if sc.name == row.name][0]
    assert s.dynamics.diffusion(t, x)[0] ** 2 == pytest.approx(5 * 0.4**1.5)
    assert s.dynamics.drift(t, x)[0] == pytest.approx(1.6)
    assert s.null_model.name == "proportional"


def test_outputs():
    r = run_scenario(small_scenario(mc_reps=2))
    text = results_csv([r], ["seed: 3"])
    lines = text.splitlines()
    assert lines[0] == "# seed: 3" and lines[1] == ",".join(CSV_COLUMNS)
    assert len(lines) == 4 and lines[2].endswith(",")
    assert results_csv([r], timing=True).splitlines()[1].split(",")[-1] != ""
    table = format_table([r])
    assert "n=100 a=0.05" in table and "bm" in table


def test_bump_signal_occupies_one_cell():
    s = bump_signal(256, 2.0)
    assert np.count_nonzero(s) == 16 and s.max() == 2.0
    assert np.flatnonzero(s)[0] == 128


def test_detection_sweep_limits():
    null = detection_rate_sweep(0.0, [256], 2000, 1)[256]
    size = exact_null_size(256, 0.05)
    assert abs(null - size) < 3 * math.sqrt(size * (1 - size) / 2000)
    assert detection_rate_sweep(50.0, [256, 1024], 200, 1) == {256: 1.0, 1024: 1.0}
    assert detection_rate_sweep(1.0, [256], 300, 7) == detection_rate_sweep(1.0, [256], 300, 7)
