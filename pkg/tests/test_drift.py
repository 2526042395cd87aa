import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oflab.drift import (
    TwoParticleClass,
    check_sc,
    check_ssc,
    classify_two_particle,
    counterexample_3p,
    from_dict,
    general,
    lyapunov_drift,
    projected_drift,
    random_spec,
    random_ssc_spec,
    rank_based,
    shifted,
    to_general,
    two_particle,
)
from oflab.ordering import all_permutations, project_centered

finite = st.floats(-5, 5, allow_nan=False)
# quarter steps keep values clear of the comparison slack
quarters = st.integers(-12, 12).map(lambda k: k / 4)


def test_rank_based_examples():
    s = rank_based((1, -1))
    np.testing.assert_array_equal(s.velocity((1, 2)), (1, -1))
    np.testing.assert_array_equal(s.velocity((2, 1)), (-1, 1))
    np.testing.assert_array_equal(rank_based((1, 0, -1)).velocity((2, 1, 3)), (0, 1, -1))
    np.testing.assert_array_equal(rank_based((5,)).velocity((1,)), (5,))


@given(st.lists(finite, min_size=1, max_size=5))
def test_rank_based_defining_identity(b):
    s = rank_based(b)
    for p in all_permutations(len(b)):
        v = s.velocity(p)
        for i, particle in enumerate(p):
            assert v[particle - 1] == b[i]


def test_general_table_must_be_complete():
    with pytest.raises(ValueError):
        general({(1, 2): (0, 0)})


def test_dict_round_trip():
    for spec in (rank_based((3, 1, -1)), counterexample_3p((-0.5, 1, -1), (2, -1, 1))):
        again = from_dict(spec.to_dict())
        np.testing.assert_array_equal(again.table_array(), spec.table_array())
    np.testing.assert_array_equal(to_general(rank_based((2, 0))).table_array(), rank_based((2, 0)).table_array())


def test_projected_drift_examples():
    np.testing.assert_allclose(projected_drift(two_particle((2, 0), (2, 0))).velocity((1, 2)), (1, -1))
    p = projected_drift(rank_based((3, 1, -1)))
    for perm in all_permutations(3):
        np.testing.assert_allclose(p.rank_listing(perm), (2, 0, -2))


def test_sc_examples():
    assert check_sc(rank_based((1, 0, -1))).satisfies_sc
    rep = check_sc(two_particle((-1, 0), (0, -1)))
    assert not rep.satisfies_sc
    assert ((1, 2), 1) in [(s, i) for s, i, _, _ in rep.violations]
    rep = check_sc(counterexample_3p((-0.5, 1, -1), (2, -1, 1)))
    assert not rep.satisfies_sc
    assert ((1, 2, 3), 1) in [(s, i) for s, i, _, _ in rep.violations]


def test_ssc_examples():
    rep = check_ssc(rank_based((1, 0, -1)))
    assert rep.b_bar == pytest.approx(1) and rep.satisfies_ssc
    rep = check_ssc(two_particle((0, 0), (0, 0)))
    assert rep.b_bar == 0 and not rep.satisfies_ssc
    assert check_ssc(rank_based((3, 1, -1))).b_bar == pytest.approx(2)


def test_classification_examples():
    assert classify_two_particle(two_particle((1, -1), (-1, 1))) == (TwoParticleClass.CONV_CONV, 2, -2)
    assert classify_two_particle(two_particle((-1, 0), (1, 0))) == (TwoParticleClass.DIV_DIV, -1, 1)
    assert classify_two_particle(two_particle((0, 0), (0, 0)))[0] is TwoParticleClass.DEGENERATE_ZERO
    assert classify_two_particle(two_particle((1, 0), (1, 0)))[0] is TwoParticleClass.CONV_DIV
    assert classify_two_particle(two_particle((-1, 0), (-1, 0)))[0] is TwoParticleClass.DIV_CON
    with pytest.raises(ValueError):
        classify_two_particle(rank_based((1, 0, -1)))


@given(st.lists(st.floats(0.01, 3), min_size=1, max_size=6), finite)
def test_strictly_decreasing_rank_vector_is_strongly_stable(steps, top):
    b = top - np.concatenate([[0.0], np.cumsum(steps)])
    assert check_ssc(rank_based(b)).satisfies_ssc


def test_strong_stability_implies_stability_on_random_specs():
    rng = np.random.default_rng(11)
    strong = 0
    for k in range(1000):
        n = 2 + k % 3
        spec = random_ssc_spec(n, rng) if k % 2 else random_spec(n, rng)
        rep = check_sc(spec)
        assert rep.satisfies_ssc == (rep.b_bar > 0)
        if rep.satisfies_ssc:
            strong += 1
            assert rep.satisfies_sc
    assert strong >= 500


@given(quarters, quarters, quarters, quarters)
def test_two_particle_conditions_match_classes(a, b, c, d):
    spec = two_particle((a, b), (c, d))
    cls, bm, bp = classify_two_particle(spec)
    rep = check_sc(spec)
    converging = cls in (TwoParticleClass.CONV_CONV, TwoParticleClass.DEGENERATE_ZERO)
    assert rep.satisfies_sc == converging
    # the strong margin for a pair is min(b-, -b+) / 2, so both rates must be strict
    assert rep.b_bar == pytest.approx(min(bm, -bp) / 2, abs=1e-12)
    assert rep.satisfies_ssc == (bm > 0 and bp < 0)


def test_ssc_needs_both_rates_strict():
    # converging with b- - b+ > 0, yet b- = 0 leaves no margin
    rep = check_sc(two_particle((0, 0), (-1, 0)))
    assert rep.satisfies_sc and not rep.satisfies_ssc


def test_lyapunov_inequality_on_random_points():
    rng = np.random.default_rng(4)
    for k in range(20):
        spec = random_ssc_spec(2 + k % 4, rng)
        b_bar = check_ssc(spec).b_bar
        for _ in range(200):
            z = project_centered(rng.normal(size=spec.n) * rng.uniform(0.1, 10))
            assert lyapunov_drift(spec, z) <= -b_bar * np.abs(z).max() + 1e-9


def test_shift_moves_every_velocity():
    spec = shifted(rank_based((1, 0, -1)), 2.5)
    np.testing.assert_allclose(spec.rank_listing((3, 1, 2)), (3.5, 2.5, 1.5))
    assert check_ssc(spec).b_bar == pytest.approx(1)
