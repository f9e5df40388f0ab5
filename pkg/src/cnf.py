"""Clause-level representation, Tseitin encoding, cardinality encodings, DIMACS I/O.

Literals are signed non-zero integers; ``abs(lit)`` is the variable index.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DimacsFormatError
from .formula import Bin, Connective, ConstFalse, Formula, Not, Var, variables

logger = logging.getLogger(__name__)

Literal = int
Clause = list[int]


@dataclass
class Cnf:
    num_vars: int = 0
    clauses: list[Clause] = field(default_factory=list)

    def __post_init__(self):
        for clause in self.clauses:
            for lit in clause:
                if lit == 0:
                    raise ValueError("0 is not a literal")
                if abs(lit) > self.num_vars:
                    raise ValueError(f"Literal {lit} exceeds num_vars={self.num_vars}")

    def add(self, clause: Iterable[int]) -> None:
        clause = list(clause)
        for lit in clause:
            if lit == 0:
                raise ValueError("0 is not a literal")
            self.num_vars = max(self.num_vars, abs(lit))
        self.clauses.append(clause)

    def extend(self, clauses: Iterable[Iterable[int]]) -> None:
        for clause in clauses:
            self.add(clause)

    def __len__(self) -> int:
        return len(self.clauses)


class VarAllocator:
    """Hands out fresh variable indices; indices are never reused."""

    def __init__(self, start: int = 0):
        self._last = start
        self.names: dict[int, str] = {}
        self._by_name: dict[str, int] = {}

    @property
    def num_vars(self) -> int:
        return self._last

    def fresh(self, name: str | None = None) -> int:
        self._last += 1
        if name is not None:
            self.names[self._last] = name
        return self._last

    def var(self, name: str) -> int:
        """Index of a named (formula) variable, allocated on first use."""
        if name not in self._by_name:
            self._by_name[name] = self.fresh(name)
        return self._by_name[name]

    def lookup(self, name: str) -> int:
        return self._by_name[name]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name


# --- Gate definitions --------------------------------------------------------

def gate_clauses(out: int, conn: Connective, a: int, b: int) -> list[Clause]:
    """Clauses of ``out <-> (a conn b)``."""
    if conn is Connective.AND:
        return [[-out, a], [-out, b], [out, -a, -b]]
    if conn is Connective.OR:
        return [[-out, a, b], [out, -a], [out, -b]]
    return [[-out, -a, b], [out, a], [out, -b]]


def iff_clauses(a: int, b: int) -> list[Clause]:
    return [[-a, b], [a, -b]]


def guarded(guard: int, clauses: Iterable[Clause]) -> list[Clause]:
    """``guard -> C`` for each clause C."""
    return [[-guard, *clause] for clause in clauses]


# --- Tseitin -----------------------------------------------------------------

def tseitin(phi: Formula, out: int, alloc: VarAllocator) -> Cnf:
    """CNF whose models, projected on formula variables, satisfy ``out <-> phi``.

    Every formula variable must already have an index in ``alloc``; leaves
    reuse that index, each inner subformula gets one fresh variable.
    """
    cnf = Cnf(num_vars=alloc.num_vars)
    _define(phi, out, alloc, cnf)
    cnf.num_vars = max(cnf.num_vars, alloc.num_vars)
    return cnf


def _literal(phi: Formula, alloc: VarAllocator, cnf: Cnf) -> int:
    if isinstance(phi, Var):
        return alloc.lookup(phi.name)
    y = alloc.fresh()
    _define(phi, y, alloc, cnf)
    return y


def _define(phi: Formula, out: int, alloc: VarAllocator, cnf: Cnf) -> None:
    match phi:
        case Var(name):
            cnf.extend(iff_clauses(out, alloc.lookup(name)))
        case ConstFalse():
            cnf.add([-out])
        case Not(child):
            y = _literal(child, alloc, cnf)
            cnf.extend([[-out, -y], [out, y]])
        case Bin(conn, left, right):
            a = _literal(left, alloc, cnf)
            b = _literal(right, alloc, cnf)
            cnf.extend(gate_clauses(out, conn, a, b))
        case _:
            raise TypeError(f"Not a formula: {phi!r}")


def equivalence_cnf(phi: Formula, psi: Formula) -> Cnf:
    """Clauses that are unsatisfiable iff ``phi`` and ``psi`` are equivalent."""
    alloc = VarAllocator()
    for name in sorted(variables(phi) | variables(psi)):
        alloc.var(name)
    x1 = alloc.fresh("x1")
    x2 = alloc.fresh("x2")
    cnf = tseitin(phi, x1, alloc)
    cnf.extend(tseitin(psi, x2, alloc).clauses)
    cnf.extend([[x1, x2], [-x1, -x2]])
    cnf.num_vars = alloc.num_vars
    return cnf


# --- Cardinality -------------------------------------------------------------

def exactly_one(lits: Sequence[int]) -> list[Clause]:
    if not lits:
        raise ValueError("exactly_one needs at least one literal")
    clauses = [list(lits)]
    for i in range(len(lits)):
        for j in range(i + 1, len(lits)):
            clauses.append([-lits[i], -lits[j]])
    return clauses


def at_most_k(lits: Sequence[int], k: int, alloc: VarAllocator) -> list[Clause]:
    """Sequential counter: ``s[i][j]`` holds when at least j+1 of lits[0..i] are true."""
    n = len(lits)
    if not 0 <= k <= n:
        raise ValueError(f"Bound {k} outside 0..{n}")
    if k == n:
        return []
    if k == 0:
        return [[-lit] for lit in lits]

    s = [[alloc.fresh() for _ in range(k)] for _ in range(n - 1)]
    clauses: list[Clause] = [[-lits[0], s[0][0]]]
    clauses += [[-s[0][j]] for j in range(1, k)]
    for i in range(1, n - 1):
        clauses.append([-lits[i], s[i][0]])
        clauses.append([-s[i - 1][0], s[i][0]])
        for j in range(1, k):
            clauses.append([-lits[i], -s[i - 1][j - 1], s[i][j]])
            clauses.append([-s[i - 1][j], s[i][j]])
        clauses.append([-lits[i], -s[i - 1][k - 1]])
    clauses.append([-lits[n - 1], -s[n - 2][k - 1]])
    return clauses


# --- DIMACS / QDIMACS --------------------------------------------------------

def _clause_lines(cnf: Cnf) -> list[str]:
    return [" ".join(map(str, clause)) + (" 0" if clause else "0") for clause in cnf.clauses]


def write_dimacs(cnf: Cnf, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {cnf.num_vars} {len(cnf.clauses)}")
    lines += _clause_lines(cnf)
    return "\n".join(lines) + "\n"


def write_qdimacs(cnf: Cnf, prefix: Sequence[tuple[str, Sequence[int]]],
                  comments: Sequence[str] = ()) -> str:
    """``prefix`` lists ('e' | 'a', variables) blocks outermost first; empty blocks are skipped."""
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {cnf.num_vars} {len(cnf.clauses)}")
    for quantifier, block in prefix:
        if quantifier not in ("e", "a"):
            raise ValueError(f"Unknown quantifier '{quantifier}'")
        if block:
            lines.append(f"{quantifier} " + " ".join(map(str, block)) + " 0")
    lines += _clause_lines(cnf)
    return "\n".join(lines) + "\n"


def _read_header(lines: list[str]) -> tuple[int, int, int]:
    for i, line in enumerate(lines):
        stripped = line.strip()
        if not stripped or stripped.startswith("c"):
            continue
        parts = stripped.split()
        if len(parts) != 4 or parts[0] != "p" or parts[1] != "cnf":
            raise DimacsFormatError(f"Malformed header on line {i + 1}: '{stripped}'")
        try:
            return int(parts[2]), int(parts[3]), i + 1
        except ValueError:
            raise DimacsFormatError(f"Malformed header on line {i + 1}: '{stripped}'") from None
    raise DimacsFormatError("Missing 'p cnf' header")


def _read_clauses(tokens: list[str], num_vars: int, num_clauses: int) -> list[Clause]:
    clauses: list[Clause] = []
    current: Clause = []
    for token in tokens:
        try:
            lit = int(token)
        except ValueError:
            raise DimacsFormatError(f"Not a literal: '{token}'") from None
        if lit == 0:
            clauses.append(current)
            current = []
        elif abs(lit) > num_vars:
            raise DimacsFormatError(f"Literal {lit} out of range for {num_vars} variables")
        else:
            current.append(lit)
    if current:
        raise DimacsFormatError("Last clause is not terminated by 0")
    if len(clauses) != num_clauses:
        raise DimacsFormatError(f"Header announces {num_clauses} clauses, found {len(clauses)}")
    return clauses


def parse_dimacs(text: str) -> Cnf:
    lines = text.splitlines()
    num_vars, num_clauses, body = _read_header(lines)
    tokens = [tok for line in lines[body:] if not line.strip().startswith("c") for tok in line.split()]
    return Cnf(num_vars, _read_clauses(tokens, num_vars, num_clauses))


def parse_qdimacs(text: str) -> tuple[Cnf, list[tuple[str, list[int]]]]:
    lines = text.splitlines()
    num_vars, num_clauses, body = _read_header(lines)
    prefix: list[tuple[str, list[int]]] = []
    tokens: list[str] = []
    for line in lines[body:]:
        stripped = line.strip()
        if not stripped or stripped.startswith("c"):
            continue
        head = stripped.split()
        if head[0] in ("e", "a"):
            if tokens:
                raise DimacsFormatError("Quantifier line after clauses")
            if head[-1] != "0":
                raise DimacsFormatError(f"Quantifier line not terminated by 0: '{stripped}'")
            try:
                block = [int(tok) for tok in head[1:-1]]
            except ValueError:
                raise DimacsFormatError(f"Malformed quantifier line: '{stripped}'") from None
            if any(not 0 < v <= num_vars for v in block):
                raise DimacsFormatError(f"Quantified variable out of range: '{stripped}'")
            prefix.append((head[0], block))
        else:
            tokens.extend(head)
    return Cnf(num_vars, _read_clauses(tokens, num_vars, num_clauses)), prefix
