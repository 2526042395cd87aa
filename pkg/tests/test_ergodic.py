import math

import numpy as np
import pytest

from oflab.drift import random_ssc_spec, rank_based, two_particle
from oflab.ergodic import (
    EmpiricalConeMeasure,
    ProjectedRun,
    estimate_cone_measure,
    estimate_velocity,
    scale_change_check,
    simulate_projected,
)
from oflab.ordering import all_permutations


@pytest.fixture(scope="module")
def run3():
    return simulate_projected(rank_based((1, 0, -1)), 1e4, 1e-2, seed=1)


def test_uniform_measure_gives_mean_rank_velocity():
    spec = rank_based((3, 1, -1))
    mu = EmpiricalConeMeasure({p: 1 / 6 for p in all_permutations(3)}, 1.0, 0.0)
    est = estimate_velocity(spec, mu)
    np.testing.assert_allclose(est.v_by_index, 1.0, rtol=1e-15)
    assert est.spread <= 1e-15 and est.standard_error == 0


def test_incomplete_measure_is_rejected():
    with pytest.raises(ValueError):
        estimate_velocity(rank_based((1, -1)), EmpiricalConeMeasure({(1, 2): 1.0}, 1.0, 0.0))


def test_two_particle_cones_are_balanced():
    run = simulate_projected(rank_based((1, -1)), 1e4, 1e-2, seed=3)
    mu = estimate_cone_measure(run)
    assert mu.weights[(1, 2)] == pytest.approx(0.5, abs=0.02)
    # the centered gap stays of order one
    assert np.abs(run.trajectory.states).mean() < 2


def test_rank_based_cones_are_exchangeable(run3):
    mu = estimate_cone_measure(run3)
    assert math.fsum(mu.weights.values()) == pytest.approx(1.0, abs=1e-9)
    for w in mu.weights.values():
        assert w == pytest.approx(1 / 6, abs=0.02)
    est = estimate_velocity(rank_based((1, 0, -1)), mu)
    assert abs(est.v) < 1e-12 and est.spread < 0.05


def test_independent_seeds_agree(run3):
    spec = rank_based((1, 0, -1))
    a = estimate_velocity(spec, estimate_cone_measure(run3))
    b = estimate_velocity(spec, estimate_cone_measure(simulate_projected(spec, 1e4, 1e-2, seed=2)))
    se = math.hypot(a.standard_error, b.standard_error)
    for va, vb in zip(a.v_by_index, b.v_by_index):
        assert abs(va - vb) <= 3 * se


def test_burn_in_drops_whole_blocks(run3):
    mu = estimate_cone_measure(run3, 0.1)
    assert mu.block_weights.shape == (90, 6)
    assert mu.burn_in == pytest.approx(1e3)
    with pytest.raises(ValueError):
        estimate_cone_measure(run3, 1.0)


def test_trajectory_input_matches_block_counts():
    run = simulate_projected(rank_based((2, 0, -1)), 50, 1e-2, seed=4, record_every=1)
    from_blocks = estimate_cone_measure(run, 0.0)
    from_path = estimate_cone_measure(run.trajectory, 0.0)
    for p in all_permutations(3):
        assert from_blocks.weights[p] == pytest.approx(from_path.weights[p], abs=1e-12)


def test_states_stay_centered():
    run = simulate_projected(random_ssc_spec(4, np.random.default_rng(0)), 100, 1e-2, seed=0)
    assert np.abs(run.trajectory.states.sum(axis=1)).max() < 1e-12


def test_driftless_spec_warns():
    with pytest.warns(UserWarning):
        run = simulate_projected(two_particle((0, 0), (0, 0)), 100, 1e-2)
    mu = estimate_cone_measure(run)
    assert set(mu.weights) == {(1, 2), (2, 1)}


@pytest.mark.parametrize("spec", [rank_based((3, 1, -1)), random_ssc_spec(3, np.random.default_rng(1))])
def test_spread_shrinks_with_horizon(spec):
    wins = 0
    for seed in range(20):
        run = simulate_projected(spec, 4000, 1e-2, seed=seed, blocks=100)
        quarter = ProjectedRun(run.trajectory, run.block_counts[:25], run.dt, run.T / 4)
        full = estimate_velocity(spec, estimate_cone_measure(run, 0.0)).spread
        part = estimate_velocity(spec, estimate_cone_measure(quarter, 0.0)).spread
        wins += full < part
    assert wins >= 16


def test_outputs(tmp_path, run3):
    mu = estimate_cone_measure(run3)
    mu.to_csv(tmp_path / "mu.csv")
    lines = (tmp_path / "mu.csv").read_text().splitlines()
    assert lines[0] == "sigma,weight" and len(lines) == 7
    d = estimate_velocity(rank_based((1, 0, -1)), mu).to_dict()
    assert set(d) == {"v_by_index", "v", "spread", "stderr"}


def test_scale_change_unit_noise_is_consistent():
    res = scale_change_check(rank_based((1, -1)), 1.0, 0.5, 1e-2, seed=1, paths=500)
    assert res["flagged"] == []
    assert all(abs(row["z"]) < 4 for row in res["stats"].values())


def test_scale_change_small_noise_converging_pair():
    res = scale_change_check(two_particle((1, -1), (-1, 1)), 0.01, 0.2, 1e-3, seed=2, paths=500)
    occ = res["stats"]["occupation_12"]
    assert abs(occ["z"]) < 3
    assert res["flagged"] == []


def test_scale_change_brownian():
    res = scale_change_check(two_particle((0, 0), (0, 0)), 0.05, 0.5, 1e-2, seed=3, paths=1000)
    var = res["stats"]["var_x1"]
    assert abs(var["z"]) < 3
    assert var["direct"] == pytest.approx(0.05, rel=0.15)
