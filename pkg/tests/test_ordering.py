import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oflab.ordering import (
    all_permutations,
    apply,
    as_word,
    compose,
    in_coincidence_set,
    inverse,
    perm_index,
    project_centered,
    sigma_of,
    sigma_set,
    word_str,
)
from oracles import sigma_brute, sigma_set_brute

# few distinct values so ties are common
tied_vectors = st.lists(st.integers(-2, 2).map(float), min_size=1, max_size=5)
real_vectors = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=6)


@pytest.mark.parametrize(
    "x, expected",
    [((3, 1, 2), (2, 3, 1)), ((0, 0), (1, 2)), ((5, 5, 1), (3, 1, 2))],
)
def test_sigma_of_examples(x, expected):
    assert sigma_of(x) == expected


def test_sigma_set_examples():
    assert sigma_set((0, 0)) == {(1, 2), (2, 1)}
    assert sigma_set((1, 2)) == {(1, 2)}
    assert sigma_set((0, 0, 1)) == {(1, 2, 3), (2, 1, 3)}


def test_coincidence_examples():
    assert in_coincidence_set((0, 0))
    assert not in_coincidence_set((0, 1))
    assert in_coincidence_set((1, 1 + 1e-15), tol=1e-12)
    assert not in_coincidence_set((1,))


def test_project_examples():
    np.testing.assert_allclose(project_centered((1, -1)), (1, -1))
    np.testing.assert_allclose(project_centered((2, 0)), (1, -1))
    np.testing.assert_allclose(project_centered((3, 0, 0)), (2, -1, -1))


def test_word_round_trip():
    assert as_word("231") == (2, 3, 1)
    assert word_str((2, 3, 1)) == "231"
    with pytest.raises(ValueError):
        as_word((1, 1, 2))


def test_perm_index_follows_enumeration():
    for n in range(1, 6):
        perms = all_permutations(n)
        assert perms == sorted(itertools.permutations(range(1, n + 1)))
        assert [perm_index(p) for p in perms] == list(range(len(perms)))


def test_compose_with_inverse_is_identity():
    for p in all_permutations(4):
        assert compose(p, inverse(p)) == (1, 2, 3, 4)
        assert inverse(inverse(p)) == p


@given(tied_vectors)
def test_sigma_of_matches_enumeration(x):
    assert sigma_of(x) == sigma_brute(x)


@given(tied_vectors)
def test_sigma_set_matches_enumeration(x):
    got = sigma_set(x)
    assert got == sigma_set_brute(x)
    assert sigma_of(x) in got


@given(tied_vectors, st.data())
def test_sigma_set_closed_under_tie_swaps(x, data):
    got = sigma_set(x)
    n = len(x)
    i = data.draw(st.integers(0, n - 1))
    j = data.draw(st.integers(0, n - 1))
    if x[i] != x[j]:
        return
    swap = {i + 1: j + 1, j + 1: i + 1}
    assert {tuple(swap.get(v, v) for v in p) for p in got} == got


@given(real_vectors)
def test_sigma_of_sorts(x):
    assert np.all(np.diff(apply(sigma_of(x), x)) >= 0)


@given(real_vectors, st.floats(-1e3, 1e3))
def test_projection_idempotent_and_translation_free(x, c):
    p = project_centered(x)
    scale = 1 + max(abs(v) for v in x) + abs(c)
    np.testing.assert_allclose(project_centered(p), p, atol=1e-12 * scale)
    np.testing.assert_allclose(project_centered(np.add(x, c)), p, atol=1e-12 * scale)
    assert abs(p.sum()) <= 1e-12 * len(x) * scale


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=5), st.floats(0, 0.5))
def test_sigma_set_with_tolerance_contains_sigma(x, tol):
    assert sigma_of(x) in sigma_set(x, tol)
    assert sigma_set(x) <= sigma_set(x, tol)
