"""
Tests for words, truncation sets and boundary sets
"""

from itertools import product
from math import comb, factorial

import pytest
from hypothesis import given, strategies as st

from errors import DomainError
from multi_index import (MultiIndex, boundary_set, degree, enumerate_A, enumerate_words, parse_word, shuffle,
                         weight)


def brute_force_A(m, d):
    words = []
    for k in range(1, m + 1):
        words += [w for w in product(range(d + 1), repeat=k) if weight(w) <= m]
    return set(words)


def test_weight_counts_zeros_twice():
    assert weight((0,)) == 2
    assert weight((1,)) == 1
    assert weight((1, 0, 2)) == 4
    assert degree((1, 0, 2)) == 3
    assert MultiIndex((0, 0, 1), 2).zero_count == 2


def test_word_validation():
    with pytest.raises(DomainError):
        MultiIndex((), 1)
    with pytest.raises(DomainError):
        MultiIndex((2,), 1)
    with pytest.raises(DomainError):
        MultiIndex((1,), 0)


def test_parse_and_print():
    word = parse_word("1.1.0", 1)
    assert word.letters == (1, 1, 0)
    assert str(word) == "1.1.0"
    assert MultiIndex.parse("0", 3) == MultiIndex((0,), 3)
    with pytest.raises(DomainError):
        parse_word("1..0", 1)
    with pytest.raises(DomainError):
        parse_word("1.x", 1)


def test_A_for_small_levels():
    assert enumerate_A(0, 1) == []
    assert [w.letters for w in enumerate_A(1, 1)] == [(1,)]
    assert [w.letters for w in enumerate_A(2, 1)] == [(1,), (0,), (1, 1)]
    assert len(enumerate_A(3, 1)) == 6


@pytest.mark.parametrize("m", range(0, 6))
@pytest.mark.parametrize("d", [1, 2, 3])
def test_A_matches_brute_force(m, d):
    words = enumerate_A(m, d)
    assert {w.letters for w in words} == brute_force_A(m, d)
    assert len(words) == len(set(words))
    assert words == sorted(words)


def test_zero_free_words_of_A_count():
    # zero-free words of degree <= m over d letters
    for m, d in [(3, 1), (3, 2), (4, 2)]:
        zero_free = [w for w in enumerate_A(m, d) if w.is_zero_free]
        assert len(zero_free) == sum(d ** k for k in range(1, m + 1))


def test_enumerate_A_rejects_bad_input():
    with pytest.raises(DomainError):
        enumerate_A(-1, 1)
    with pytest.raises(DomainError):
        enumerate_A(2, 0)


def test_enumerate_words_by_degree():
    words = enumerate_words(2, 1)
    assert [w.letters for w in words] == [(0,), (1,), (0, 0), (0, 1), (1, 0), (1, 1)]
    assert len(enumerate_words(3, 2)) == 3 + 9 + 27


@given(d=st.integers(1, 3), data=st.data())
def test_weight_adds_under_concatenation(d, data):
    letters = st.lists(st.integers(0, d), min_size=1, max_size=6)
    I = MultiIndex(tuple(data.draw(letters)), d)
    J = MultiIndex(tuple(data.draw(letters)), d)
    assert (I + J).weight == I.weight + J.weight
    assert (I + J).degree == I.degree + J.degree
    assert weight(I.letters + J.letters) == weight(I) + weight(J)


@given(m=st.integers(0, 5), d=st.integers(1, 3))
def test_truncation_sets_are_nested(m, d):
    smaller = set(enumerate_A(m, d))
    larger = set(enumerate_A(m + 1, d))
    assert smaller <= larger
    assert all(w.weight == m + 1 for w in larger - smaller)


# ==================== Boundary sets ====================

def test_boundary_set_for_example_level():
    letters = [w.letters for w in boundary_set(3, 1)]
    for word in [(0, 0), (0, 1, 0), (1, 1, 0), (0, 1, 1), (1, 1, 1, 1)]:
        assert word in letters
    assert all(w.weight in (4, 5) for w in boundary_set(3, 1))


def test_boundary_set_level_zero_is_every_letter():
    assert [w.letters for w in boundary_set(0, 2)] == [(1,), (2,), (0,)]


@pytest.mark.parametrize("m", range(0, 5))
@pytest.mark.parametrize("d", [1, 2])
def test_boundary_set_definition(m, d):
    A = brute_force_A(m, d)
    expected = {(a,) + tail for tail in A | {()} for a in range(d + 1) if weight((a,) + tail) > m}
    found = boundary_set(m, d)
    assert {w.letters for w in found} == expected
    assert all(w.letters not in A for w in found)
    assert all(w.weight in (m + 1, m + 2) for w in found)


def test_boundary_degree_guard():
    boundary_set(3, 1, max_degree_guard=4)
    with pytest.raises(DomainError):
        boundary_set(3, 1, max_degree_guard=3)


# ==================== Shuffles ====================

def test_shuffle_of_single_letters():
    assert sorted(shuffle((1,), (2,))) == [(1, 2), (2, 1)]


@given(u=st.lists(st.integers(0, 2), min_size=0, max_size=4),
       v=st.lists(st.integers(0, 2), min_size=0, max_size=4))
def test_shuffle_counts_and_preserves_subwords(u, v):
    words = shuffle(tuple(u), tuple(v))
    assert len(words) == comb(len(u) + len(v), len(u))
    assert all(sorted(w) == sorted(u + v) for w in words)


def test_shuffle_of_distinct_letters_is_all_permutations():
    words = shuffle((1, 2), (3, 4))
    assert len(set(words)) == factorial(4) // (factorial(2) * factorial(2))
