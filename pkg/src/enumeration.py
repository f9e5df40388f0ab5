"""Counting, exhaustive enumeration and uniform sampling of formulae by size.

Every formula of size ``n`` is produced by exactly one production: a leaf
(``n == 1``), a negation over a formula of size ``n-1``, or a binary
connective over a split ``i + j == n-1``. Counting follows that recurrence;
enumeration and sampling walk the same productions in the same fixed order:

1. leaves: variables in space order, then the constant false;
2. ``Not`` over every formula of size ``n-1``;
3. binary nodes, left size ascending, then connective, then left operand,
   then right operand.

``unrank`` is the bijection between ``range(count(space, n))`` and that
order, so a uniformly drawn index gives a uniformly drawn formula.
"""
from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

from .errors import EmptySpaceError
from .formula import FALSE, Bin, Connective, Formula, Not, Var

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FormulaSpace:
    variables: tuple[str, ...]
    connectives: tuple[Connective, ...]
    allow_not: bool = True
    allow_false: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(dict.fromkeys(self.variables)))
        # connective order is fixed by the enum, whatever order the caller used
        ordered = tuple(c for c in Connective if c in set(self.connectives))
        object.__setattr__(self, "connectives", ordered)
        if not self.variables and not self.allow_false:
            raise EmptySpaceError("A formula space needs at least one leaf")

    @property
    def leaves(self) -> tuple[Formula, ...]:
        leaves: list[Formula] = [Var(name) for name in self.variables]
        if self.allow_false:
            leaves.append(FALSE)
        return tuple(leaves)


class CountTable:
    """Exact counts N(n) for one space, grown on demand."""

    def __init__(self, space: FormulaSpace):
        self.space = space
        self._counts = [0, len(space.leaves)]

    def __getitem__(self, n: int) -> int:
        if n < 1:
            raise ValueError(f"Formula sizes start at 1, got {n}")
        while len(self._counts) <= n:
            self._counts.append(self._next())
        return self._counts[n]

    def _next(self) -> int:
        n = len(self._counts)
        total = self._counts[n - 1] if self.space.allow_not else 0
        conns = len(self.space.connectives)
        if conns:
            total += conns * sum(self._counts[i] * self._counts[n - 1 - i] for i in range(1, n - 1))
        return total


@lru_cache(maxsize=128)
def count_table(space: FormulaSpace) -> CountTable:
    return CountTable(space)


def count(space: FormulaSpace, n: int) -> int:
    return count_table(space)[n]


def catalan(m: int) -> int:
    return math.comb(2 * m, m) // (m + 1)


def closed_form_count(num_connectives: int, num_variables: int, m: int) -> int:
    """Distinct binary trees with ``m`` internal nodes and labelled nodes and leaves."""
    return catalan(m) * num_connectives ** m * num_variables ** (m + 1)


def asymptotic_count(num_connectives: int, num_variables: int, m: int) -> float:
    """Stirling estimate of :func:`closed_form_count`."""
    if m == 0:
        return float(num_variables)
    return 4 ** m / (math.sqrt(math.pi) * m ** 1.5) * num_connectives ** m * num_variables ** (m + 1)


@dataclass
class Enumerator:
    """Streams formulae of one space; lists for smaller sizes are kept between calls."""
    space: FormulaSpace
    _memo: dict[int, list[Formula]] = field(default_factory=dict, repr=False)

    def materialised(self, n: int) -> list[Formula]:
        if n not in self._memo:
            self._memo[n] = list(self.stream(n))
        return self._memo[n]

    def stream(self, n: int) -> Iterator[Formula]:
        if n < 1:
            raise ValueError(f"Formula sizes start at 1, got {n}")
        if n in self._memo:
            yield from self._memo[n]
            return
        if n == 1:
            yield from self.space.leaves
            return
        if self.space.allow_not:
            for child in self.materialised(n - 1):
                yield Not(child)
        for left_size in range(1, n - 1):
            right_size = n - 1 - left_size
            lefts = self.materialised(left_size)
            rights = self.materialised(right_size)
            for conn in self.space.connectives:
                for left in lefts:
                    for right in rights:
                        yield Bin(conn, left, right)


def enumerate_formulae(space: FormulaSpace, n: int) -> Iterator[Formula]:
    return Enumerator(space).stream(n)


def unrank(space: FormulaSpace, n: int, index: int) -> Formula:
    table = count_table(space)
    total = table[n]
    if not 0 <= index < total:
        raise IndexError(f"Index {index} outside 0..{total - 1} for size {n}")
    return _unrank(space, table, n, index)


def _unrank(space: FormulaSpace, table: CountTable, n: int, index: int) -> Formula:
    if n == 1:
        return space.leaves[index]
    if space.allow_not:
        below = table[n - 1]
        if index < below:
            return Not(_unrank(space, table, n - 1, index))
        index -= below
    for left_size in range(1, n - 1):
        right_size = n - 1 - left_size
        right_count = table[right_size]
        block = table[left_size] * right_count
        for conn in space.connectives:
            if index < block:
                left_index, right_index = divmod(index, right_count)
                return Bin(conn,
                           _unrank(space, table, left_size, left_index),
                           _unrank(space, table, right_size, right_index))
            index -= block
    raise AssertionError("index survived every production")


def sample_uniform(space: FormulaSpace, n: int, rng: random.Random) -> Formula:
    total = count(space, n)
    if total == 0:
        raise EmptySpaceError(f"No formula of size {n} exists in this space")
    return _unrank(space, count_table(space), n, rng.randrange(total))


def variable_names(n: int) -> list[str]:
    base = "pqrstuvw"
    return [base[i] if i < len(base) else f"x{i}" for i in range(n)]


def variables_for_size(size: int) -> int:
    """Variable count used for random instances of a given size: round(sqrt(s)), at least 1."""
    return max(1, round(math.sqrt(size)))


def instance_space(size: int, num_vars: int | None = None,
                   conns: Sequence[Connective] = (Connective.AND, Connective.OR),
                   allow_not: bool = True, allow_false: bool = False) -> FormulaSpace:
    n = variables_for_size(size) if num_vars is None else num_vars
    return FormulaSpace(tuple(variable_names(n)), tuple(conns), allow_not, allow_false)
