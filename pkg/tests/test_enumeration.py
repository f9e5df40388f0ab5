import random
from collections import Counter

import pytest

from src.enumeration import (Enumerator, FormulaSpace, asymptotic_count, catalan, closed_form_count, count,
                             enumerate_formulae, instance_space, sample_uniform, unrank, variable_names,
                             variables_for_size)
from src.errors import EmptySpaceError
from src.formula import FALSE, Bin, Connective, Not, Var, size

AND, OR, IMPLIES = Connective.AND, Connective.OR, Connective.IMPLIES


def binary_space(num_conns, num_vars):
    return FormulaSpace(tuple(variable_names(num_vars)), tuple(Connective)[:num_conns],
                        allow_not=False, allow_false=False)


def test_catalan():
    assert [catalan(m) for m in range(7)] == [1, 1, 2, 5, 14, 42, 132]


def test_two_connectives_two_variables_size_five():
    assert count(binary_space(2, 2), 5) == 64


@pytest.mark.parametrize("num_conns", [1, 2, 3])
@pytest.mark.parametrize("num_vars", [1, 2, 3])
def test_count_matches_closed_form(num_conns, num_vars):
    space = binary_space(num_conns, num_vars)
    for m in range(7):
        assert count(space, 2 * m + 1) == closed_form_count(num_conns, num_vars, m)
        if m:
            assert count(space, 2 * m) == 0


def test_asymptotic_count_approaches_closed_form():
    exact = closed_form_count(2, 3, 200)
    assert asymptotic_count(2, 3, 200) == pytest.approx(exact, rel=0.01)


def test_count_with_negation_and_false():
    space = FormulaSpace(("p",), (AND,), allow_not=True, allow_false=True)
    # size 1: p, false; size 2: !p, !false; size 3: !!p, !!false, and 4 conjunctions
    assert [count(space, n) for n in (1, 2, 3)] == [2, 2, 6]


def test_enumeration_order():
    space = FormulaSpace(("p", "q"), (OR, AND), allow_not=True, allow_false=True)
    assert list(enumerate_formulae(space, 1)) == [Var("p"), Var("q"), FALSE]
    assert list(enumerate_formulae(space, 2)) == [Not(Var("p")), Not(Var("q")), Not(FALSE)]
    third = list(enumerate_formulae(space, 3))
    assert third[:3] == [Not(Not(Var("p"))), Not(Not(Var("q"))), Not(Not(FALSE))]
    # connectives follow their fixed order, not the order they were given in
    assert [str(phi) for phi in third[3:6]] == ["p & p", "p & q", "p & false"]
    assert str(third[12]) == "p | p"


@pytest.mark.parametrize("n", range(1, 9))
def test_stream_length_equals_count(n):
    space = instance_space(4)
    formulae = list(enumerate_formulae(space, n))
    assert len(formulae) == count(space, n)
    assert all(size(phi) == n for phi in formulae)


@pytest.mark.slow
@pytest.mark.parametrize("n", range(9, 12))
def test_stream_length_equals_count_large(n):
    space = instance_space(4)
    assert sum(1 for _ in enumerate_formulae(space, n)) == count(space, n)


def test_enumeration_has_no_duplicates():
    space = FormulaSpace(("p", "q"), tuple(Connective), allow_not=True, allow_false=True)
    for n in range(1, 7):
        formulae = list(enumerate_formulae(space, n))
        assert len(set(formulae)) == len(formulae)


def test_enumerator_reuses_smaller_sizes():
    enumerator = Enumerator(instance_space(4))
    first = list(enumerator.stream(5))
    assert list(enumerator.stream(5)) == first
    assert enumerator.materialised(4) is enumerator.materialised(4)


def test_unrank_follows_enumeration_order():
    space = FormulaSpace(("p", "q"), (AND, IMPLIES), allow_not=True, allow_false=True)
    for n in range(1, 6):
        assert [unrank(space, n, i) for i in range(count(space, n))] == list(enumerate_formulae(space, n))


def test_unrank_rejects_out_of_range_index():
    space = instance_space(4)
    with pytest.raises(IndexError):
        unrank(space, 3, count(space, 3))


def test_empty_space():
    with pytest.raises(EmptySpaceError):
        FormulaSpace((), (AND,), allow_false=False)
    space = FormulaSpace(("p",), (AND,), allow_not=False)
    with pytest.raises(EmptySpaceError):
        sample_uniform(space, 2, random.Random(0))


def test_sampling_is_reproducible():
    space = instance_space(9)
    first = [sample_uniform(space, 9, random.Random(3)) for _ in range(5)]
    second = [sample_uniform(space, 9, random.Random(3)) for _ in range(5)]
    assert first == second
    assert all(size(phi) == 9 for phi in first)


def _chi_square_uniform(samples: int):
    stats = pytest.importorskip("scipy.stats")
    space = instance_space(4)
    support = list(enumerate_formulae(space, 4))
    rng = random.Random(42)
    seen = Counter(sample_uniform(space, 4, rng) for _ in range(samples))
    assert set(seen) <= set(support)
    observed = [seen[phi] for phi in support]
    return stats.chisquare(observed).pvalue


def test_sampler_is_uniform():
    assert _chi_square_uniform(5_000) > 0.001


@pytest.mark.slow
def test_sampler_is_uniform_at_scale():
    assert _chi_square_uniform(100_000) > 0.001


def test_variable_rule():
    assert [variables_for_size(s) for s in (1, 2, 3, 4, 9, 16, 20)] == [1, 1, 2, 2, 3, 4, 4]
    assert variable_names(3) == ["p", "q", "r"]
    assert instance_space(16).variables == ("p", "q", "r", "s")
    assert instance_space(16).connectives == (AND, OR)


def _root_shape(phi):
    if isinstance(phi, Not):
        return "not"
    if isinstance(phi, Bin):
        return phi.conn, size(phi.left)
    return "leaf"


@pytest.mark.parametrize("n", range(1, 7))
def test_sampler_root_shape_follows_counts(n):
    stats = pytest.importorskip("scipy.stats")
    space = FormulaSpace(("p", "q"), (AND, OR), allow_not=True, allow_false=True)
    if n == 1:
        expected = {"leaf": count(space, 1)}
    else:
        expected = {"not": count(space, n - 1)}
        for left in range(1, n - 1):
            for conn in space.connectives:
                expected[(conn, left)] = count(space, left) * count(space, n - 1 - left)
    total = count(space, n)
    assert sum(expected.values()) == total

    draws = 4_000
    rng = random.Random(n)
    seen = Counter(_root_shape(sample_uniform(space, n, rng)) for _ in range(draws))
    assert set(seen) <= set(expected)
    if len(expected) == 1:
        assert sum(seen.values()) == draws
        return
    shapes = list(expected)
    observed = [seen[s] for s in shapes]
    predicted = [draws * expected[s] / total for s in shapes]
    assert stats.chisquare(observed, predicted).pvalue > 0.001
