import itertools

import pytest

from src.enumeration import FormulaSpace, enumerate_formulae
from src.errors import FormulaSyntaxError, UnboundVariableError, VariableCapExceeded
from src.formula import (FALSE, MAX_NESTING, Bin, Connective, Not, Var, connectives, depth, equivalent_tt, evaluate,
                         parse, size, to_text, truth_table, uses, variables)

p, q, r = Var("p"), Var("q"), Var("r")
AND, OR, IMPLIES = Connective.AND, Connective.OR, Connective.IMPLIES


def test_and_binds_tighter_than_or():
    assert parse("p | q & r") == Bin(OR, p, Bin(AND, q, r))


def test_implication_is_right_associative():
    assert parse("p -> q -> r") == Bin(IMPLIES, p, Bin(IMPLIES, q, r))


def test_and_or_are_left_associative():
    assert parse("p & q & r") == Bin(AND, Bin(AND, p, q), r)
    assert parse("p | q | r") == Bin(OR, Bin(OR, p, q), r)


def test_negation_and_constant():
    assert parse("!!p") == Not(Not(p))
    assert parse("!false") == Not(FALSE)
    assert parse("  ( p )  ") == p


@pytest.mark.parametrize("text", [
    "p & q | r",
    "p & (q | r)",
    "(p -> q) -> r",
    "p -> q -> r",
    "p & (q & r)",
    "!(p & q)",
    "!!p | false",
    "(p | q) & !r",
])
def test_printing_is_minimal_and_stable(text):
    assert to_text(parse(text)) == text


def test_print_drops_redundant_parentheses():
    assert str(parse("((p & q)) | (r)")) == "p & q | r"
    assert str(parse("p -> (q -> r)")) == "p -> q -> r"


def test_print_parse_identity_over_small_space():
    space = FormulaSpace(("p", "q"), tuple(Connective), allow_not=True, allow_false=True)
    for n in range(1, 6):
        for phi in enumerate_formulae(space, n):
            assert parse(to_text(phi)) == phi


@pytest.mark.parametrize("text, column", [
    ("p & & q", 5),
    ("p # q", 3),
    ("p &", 4),
    ("(p | q", 7),
])
def test_syntax_errors_report_column(text, column):
    with pytest.raises(FormulaSyntaxError) as info:
        parse(text)
    assert info.value.column == column
    assert "column" in str(info.value)


def test_metrics():
    phi = parse("(p & q) | !r")
    assert size(phi) == 6
    assert depth(phi) == 2
    assert variables(phi) == {"p", "q", "r"}
    assert connectives(phi) == {AND, OR}
    assert size(parse("!false")) == 2
    assert depth(p) == 0
    assert uses(phi, Not)
    assert not uses(phi, type(FALSE))


def test_depth_and_size_bound_each_other():
    space = FormulaSpace(("p", "q"), tuple(Connective), allow_not=True, allow_false=True)
    for n in range(1, 7):
        for phi in enumerate_formulae(space, n):
            assert depth(phi) < size(phi) <= 2 ** (depth(phi) + 1) - 1


def test_metrics_on_deep_trees():
    phi = p
    for _ in range(5000):
        phi = Not(phi)
    assert size(phi) == 5001
    assert depth(phi) == 5000


def test_nesting_limit():
    deep = parse("!" * MAX_NESTING + "p")
    assert depth(deep) == MAX_NESTING
    with pytest.raises(FormulaSyntaxError, match="nests"):
        parse("!" * (MAX_NESTING + 1) + "p")
    with pytest.raises(FormulaSyntaxError):
        parse(" & ".join(["p"] * (MAX_NESTING + 2)))


def test_evaluate():
    phi = parse("p -> q & !r")
    assert evaluate(phi, {"p": False, "q": False, "r": True})
    assert evaluate(phi, {"p": 1, "q": 1, "r": 0})
    assert not evaluate(phi, {"p": True, "q": True, "r": True})
    with pytest.raises(UnboundVariableError):
        evaluate(phi, {"p": True})


def test_truth_table_first_variable_is_most_significant():
    assert str(truth_table(p, ["p", "q"])) == "0011"
    assert str(truth_table(q, ["p", "q"])) == "0101"
    assert str(truth_table(parse("p & q"), ["p", "q"])) == "0001"
    assert str(truth_table(parse("p -> q"), ["p", "q"])) == "1101"
    assert str(truth_table(FALSE, [])) == "0"


def test_truth_table_agrees_with_evaluate():
    phi = parse("(p | !q) -> r & (q | false)")
    names = ["p", "q", "r"]
    table = truth_table(phi, names)
    for i, values in enumerate(itertools.product((False, True), repeat=3)):
        assert table.value(i) == evaluate(phi, dict(zip(names, values)))


def test_truth_table_cap():
    with pytest.raises(VariableCapExceeded):
        truth_table(parse("p & q"), ["p", "q"], cap=1)


def test_truth_table_unbound_variable():
    with pytest.raises(UnboundVariableError):
        truth_table(parse("p & q"), ["p"])


def test_equivalence():
    assert equivalent_tt(parse("p -> q"), parse("!p | q"))
    assert equivalent_tt(parse("p & !p"), FALSE)
    assert equivalent_tt(parse("p | !p"), parse("!false"))
    assert not equivalent_tt(p, q)
    assert equivalent_tt(parse("p | p & q"), p)
