"""Propositional formulae: syntax trees, text grammar, metrics and truth tables.

Formulae are immutable trees over variables, the constant false, unary
negation and the binary connectives of :class:`Connective`. The text grammar
(lowest to highest precedence) is::

    formula := impl
    impl    := or ("->" impl)?        right-associative
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "!" unary | atom
    atom    := IDENT | "false" | "(" formula ")"
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from .config import Config
from .errors import FormulaSyntaxError, UnboundVariableError, VariableCapExceeded

logger = logging.getLogger(__name__)


class Connective(str, Enum):
    AND = "&"
    OR = "|"
    IMPLIES = "->"

    @property
    def precedence(self) -> int:
        return _PRECEDENCE[self]

    def apply(self, left: int, right: int, full: int) -> int:
        """Apply the connective bitwise to two packed truth tables."""
        if self is Connective.AND:
            return left & right
        if self is Connective.OR:
            return left | right
        return (~left & full) | right

    @classmethod
    def from_name(cls, name: str) -> "Connective":
        key = name.strip().lower()
        for conn in cls:
            if key in (conn.name.lower(), conn.value):
                return conn
        raise ValueError(f"Unknown connective '{name}'")


_PRECEDENCE = {Connective.IMPLIES: 1, Connective.OR: 2, Connective.AND: 3}
_NOT_PRECEDENCE = 4
_ATOM_PRECEDENCE = 5


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class ConstFalse:
    def __str__(self) -> str:
        return "false"


@dataclass(frozen=True, slots=True)
class Not:
    child: "Formula"

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class Bin:
    conn: Connective
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return to_text(self)


Formula = Union[Var, ConstFalse, Not, Bin]
FALSE = ConstFalse()

Assignment = Mapping[str, Union[bool, int]]

# Printing, evaluation and encoding recurse over the tree; parse() rejects deeper input
MAX_NESTING = 256


# --- Parsing -----------------------------------------------------------------

_GRAMMAR = r"""
    ?start: impl

    ?impl: disj
         | disj "->" impl       -> implies

    ?disj: conj
         | disj "|" conj        -> or_

    ?conj: unary
         | conj "&" unary       -> and_

    ?unary: "!" unary           -> not_
          | atom

    ?atom: FALSE                -> const_false
         | IDENT                -> var
         | "(" impl ")"

    FALSE: "false"
    IDENT: /[A-Za-z_][A-Za-z0-9_]*/

    %import common.WS
    %ignore WS
"""


@v_args(inline=True)
class _AstBuilder(Transformer):
    def implies(self, left, right):
        return Bin(Connective.IMPLIES, left, right)

    def or_(self, left, right):
        return Bin(Connective.OR, left, right)

    def and_(self, left, right):
        return Bin(Connective.AND, left, right)

    def not_(self, child):
        return Not(child)

    def const_false(self, _token):
        return FALSE

    def var(self, token):
        return Var(str(token))


_PARSER = Lark(_GRAMMAR, parser="lalr", transformer=_AstBuilder())


def parse(text: str) -> Formula:
    try:
        phi = _PARSER.parse(text)
    except UnexpectedCharacters as e:
        raise FormulaSyntaxError(f"Unknown token '{text[e.pos_in_stream]}'", e.column) from None
    except UnexpectedEOF:
        raise FormulaSyntaxError("Unexpected end of formula", len(text) + 1) from None
    except UnexpectedToken as e:
        if e.token.type == "$END":
            raise FormulaSyntaxError("Unexpected end of formula", len(text) + 1) from None
        raise FormulaSyntaxError(f"Unexpected '{e.token}'", e.column) from None
    except UnexpectedInput as e:
        raise FormulaSyntaxError("Syntax error", getattr(e, "column", 1)) from None
    nesting = depth(phi)
    if nesting > MAX_NESTING:
        raise FormulaSyntaxError(f"Formula nests {nesting} levels deep, the limit is {MAX_NESTING}", 1)
    return phi


# --- Printing ----------------------------------------------------------------

def _precedence(phi: Formula) -> int:
    if isinstance(phi, Bin):
        return phi.conn.precedence
    if isinstance(phi, Not):
        return _NOT_PRECEDENCE
    return _ATOM_PRECEDENCE


def _wrap(phi: Formula, needs_parens: bool) -> str:
    text = to_text(phi)
    return f"({text})" if needs_parens else text


def to_text(phi: Formula) -> str:
    """Render with the fewest parentheses that still parse back to ``phi``."""
    match phi:
        case Var(name):
            return name
        case ConstFalse():
            return "false"
        case Not(child):
            return "!" + _wrap(child, _precedence(child) < _NOT_PRECEDENCE)
        case Bin(conn, left, right):
            prec = conn.precedence
            if conn is Connective.IMPLIES:
                # right-associative
                left_text = _wrap(left, _precedence(left) <= prec)
                right_text = _wrap(right, _precedence(right) < prec)
            else:
                left_text = _wrap(left, _precedence(left) < prec)
                right_text = _wrap(right, _precedence(right) <= prec)
            return f"{left_text} {conn.value} {right_text}"
    raise TypeError(f"Not a formula: {phi!r}")


# --- Metrics -----------------------------------------------------------------

def size(phi: Formula) -> int:
    total = 0
    stack = [phi]
    while stack:
        node = stack.pop()
        total += 1
        match node:
            case Not(child):
                stack.append(child)
            case Bin(_, left, right):
                stack.append(left)
                stack.append(right)
    return total


def depth(phi: Formula) -> int:
    deepest = 0
    stack = [(phi, 0)]
    while stack:
        node, level = stack.pop()
        deepest = max(deepest, level)
        match node:
            case Not(child):
                stack.append((child, level + 1))
            case Bin(_, left, right):
                stack.append((left, level + 1))
                stack.append((right, level + 1))
    return deepest


def variables(phi: Formula) -> frozenset[str]:
    found: set[str] = set()
    stack = [phi]
    while stack:
        node = stack.pop()
        match node:
            case Var(name):
                found.add(name)
            case Not(child):
                stack.append(child)
            case Bin(_, left, right):
                stack.append(left)
                stack.append(right)
    return frozenset(found)


def connectives(phi: Formula) -> frozenset[Connective]:
    match phi:
        case Not(child):
            return connectives(child)
        case Bin(conn, left, right):
            return frozenset({conn}) | connectives(left) | connectives(right)
    return frozenset()


def uses(phi: Formula, node_type: type) -> bool:
    match phi:
        case Not(child):
            return node_type is Not or uses(child, node_type)
        case Bin(_, left, right):
            return node_type is Bin or uses(left, node_type) or uses(right, node_type)
    return isinstance(phi, node_type)


# --- Semantics ---------------------------------------------------------------

def evaluate(phi: Formula, assignment: Assignment) -> bool:
    match phi:
        case Var(name):
            if name not in assignment:
                raise UnboundVariableError(name)
            return bool(assignment[name])
        case ConstFalse():
            return False
        case Not(child):
            return not evaluate(child, assignment)
        case Bin(conn, left, right):
            a = evaluate(left, assignment)
            b = evaluate(right, assignment)
            if conn is Connective.AND:
                return a and b
            if conn is Connective.OR:
                return a or b
            return (not a) or b
    raise TypeError(f"Not a formula: {phi!r}")


@dataclass(frozen=True)
class TruthTable:
    """Packed truth table: bit ``i`` is the value under assignment ``i``.

    Assignment ``i`` gives variable ``k`` the value of bit ``n-1-k`` of ``i``,
    so the first variable is the most significant.
    """
    variables: tuple[str, ...]
    bits: int

    def __len__(self) -> int:
        return 1 << len(self.variables)

    def value(self, index: int) -> bool:
        return bool((self.bits >> index) & 1)

    def __str__(self) -> str:
        return "".join("1" if self.value(i) else "0" for i in range(len(self)))


@lru_cache(maxsize=64)
def variable_masks(n: int) -> tuple[tuple[int, ...], int]:
    """Packed tables of the ``n`` projection functions, plus the all-ones mask."""
    rows = 1 << n
    full = (1 << rows) - 1
    masks = []
    for k in range(n):
        period = 1 << (n - 1 - k)
        unit = ((1 << period) - 1) << period
        masks.append(full // ((1 << (2 * period)) - 1) * unit)
    return tuple(masks), full


def _check_cap(n: int, cap: int | None) -> None:
    cap = Config.TRUTH_TABLE_CAP if cap is None else cap
    if n > cap:
        raise VariableCapExceeded(f"{n} variables exceed the truth-table cap of {cap}")


def table_bits(phi: Formula, index: Mapping[str, int], full: int) -> int:
    """Evaluate ``phi`` on all assignments at once; ``index`` maps names to packed masks."""
    match phi:
        case Var(name):
            if name not in index:
                raise UnboundVariableError(name)
            return index[name]
        case ConstFalse():
            return 0
        case Not(child):
            return ~table_bits(child, index, full) & full
        case Bin(conn, left, right):
            return conn.apply(table_bits(left, index, full), table_bits(right, index, full), full)
    raise TypeError(f"Not a formula: {phi!r}")


def mask_index(varlist: Sequence[str], cap: int | None = None) -> tuple[dict[str, int], int]:
    _check_cap(len(varlist), cap)
    masks, full = variable_masks(len(varlist))
    return dict(zip(varlist, masks)), full


def truth_table(phi: Formula, varlist: Iterable[str], cap: int | None = None) -> TruthTable:
    names = tuple(varlist)
    index, full = mask_index(names, cap)
    return TruthTable(names, table_bits(phi, index, full))


def equivalent_tt(phi: Formula, psi: Formula, cap: int | None = None) -> bool:
    names = sorted(variables(phi) | variables(psi))
    index, full = mask_index(names, cap)
    return table_bits(phi, index, full) == table_bits(psi, index, full)
