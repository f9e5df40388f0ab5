"""Three-block exists-forall-exists QBF: instances, expansion engine, external adapter."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .cnf import Clause, Cnf, parse_qdimacs, write_qdimacs
from .config import Config
from .errors import (ConfigError, DimacsFormatError, ExpansionCapExceeded, SolverOutputError,
                     SolverProtocolError)
from .sat import Deadline, SatBackend, run_solver_process

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QbfInstance:
    outer_exists: tuple[int, ...]
    universals: tuple[int, ...]
    inner_exists: tuple[int, ...]
    matrix: Cnf

    def __post_init__(self):
        outer, uni, inner = set(self.outer_exists), set(self.universals), set(self.inner_exists)
        if outer & uni or outer & inner or uni & inner:
            raise ValueError("Quantifier blocks must be disjoint")
        used = {abs(lit) for clause in self.matrix.clauses for lit in clause}
        free = used - outer - uni - inner
        if free:
            raise ValueError(f"Matrix variables without a quantifier: {sorted(free)[:10]}")

    @property
    def prefix(self) -> list[tuple[str, tuple[int, ...]]]:
        return [("e", self.outer_exists), ("a", self.universals), ("e", self.inner_exists)]

    def to_qdimacs(self, comments: Sequence[str] = ()) -> str:
        return write_qdimacs(self.matrix, self.prefix, comments)

    @classmethod
    def from_qdimacs(cls, text: str) -> "QbfInstance":
        """Load a QDIMACS instance whose prefix fits exists-forall-exists (blocks may be empty)."""
        matrix, prefix = parse_qdimacs(text)
        blocks: list[list[int]] = [[], [], []]
        position = 0
        for quantifier, block in prefix:
            if quantifier == "a":
                if position == 2:
                    raise DimacsFormatError("Prefix has more than the exists-forall-exists blocks")
                position = 1
            elif position == 1:
                position = 2
            blocks[position].extend(block)
        quantified = set().union(*blocks)
        # unquantified matrix variables are outermost existentials in QDIMACS
        free = sorted({abs(l) for c in matrix.clauses for l in c} - quantified)
        return cls(tuple(free + blocks[0]), tuple(blocks[1]), tuple(blocks[2]), matrix)


class QbfStatus(str, Enum):
    TRUE = "true"
    FALSE = "false"
    TRUE_WITHOUT_MODEL = "true-without-model"


@dataclass(frozen=True)
class QbfResult:
    status: QbfStatus
    outer_model: dict[int, bool] | None = None

    @property
    def is_true(self) -> bool:
        return self.status is not QbfStatus.FALSE


QBF_FALSE = QbfResult(QbfStatus.FALSE)


def _check_cap(q: QbfInstance, cap: int | None) -> int:
    cap = Config.EXPANSION_CAP if cap is None else cap
    if len(q.universals) > cap:
        raise ExpansionCapExceeded(
            f"{len(q.universals)} universal variables exceed the expansion cap of {cap}")
    return cap


def _universal_assignments(universals: Sequence[int]):
    n = len(universals)
    for bits in range(1 << n):
        yield {v: bool((bits >> (n - 1 - k)) & 1) for k, v in enumerate(universals)}


def _instantiate(clause: Clause, fixed: Mapping[int, bool], rename: Mapping[int, int] | None = None):
    """Drop satisfied clauses (None), remove false literals, rename the rest."""
    out = []
    for lit in clause:
        v = abs(lit)
        if v in fixed:
            if fixed[v] == (lit > 0):
                return None
            continue
        if rename is not None and v in rename:
            out.append(rename[v] if lit > 0 else -rename[v])
        else:
            out.append(lit)
    return out


def expand(q: QbfInstance, cap: int | None = None) -> Cnf | None:
    """Universal expansion into one CNF; None when some copy holds the empty clause."""
    _check_cap(q, cap)
    universals = set(q.universals)
    inner = set(q.inner_exists)
    shared, local = [], []
    for clause in q.matrix.clauses:
        if any(abs(lit) in universals or abs(lit) in inner for lit in clause):
            local.append(clause)
        else:
            shared.append(clause)

    expansion = Cnf(num_vars=q.matrix.num_vars)
    if any(not clause for clause in shared):
        return None
    expansion.clauses.extend(list(c) for c in shared)
    next_var = q.matrix.num_vars
    for tau in _universal_assignments(q.universals):
        rename = {}
        for v in q.inner_exists:
            next_var += 1
            rename[v] = next_var
        for clause in local:
            instantiated = _instantiate(clause, tau, rename)
            if instantiated is None:
                continue
            if not instantiated:
                return None
            expansion.clauses.append(instantiated)
    expansion.num_vars = next_var
    return expansion


def solve_expansion(q: QbfInstance, budget: "float | Deadline | None" = None,
                    cap: int | None = None, sat_backend: SatBackend | None = None) -> QbfResult:
    deadline = Deadline.of(budget)
    expansion = expand(q, cap)
    if expansion is None:
        return QBF_FALSE
    logger.debug("Expanded %d universals into %d clauses over %d variables",
                 len(q.universals), len(expansion.clauses), expansion.num_vars)
    deadline.check()
    result = (sat_backend or SatBackend()).solve(expansion, deadline)
    if not result.satisfiable:
        return QBF_FALSE
    return QbfResult(QbfStatus.TRUE, {v: result.model[v] for v in q.outer_exists})


def parse_outer_model(stdout: str, outer: Sequence[int]) -> dict[int, bool] | None:
    """Read ``V <lit> 0`` lines; None when the solver printed none."""
    model: dict[int, bool] = {}
    outer_set = set(outer)
    for line in stdout.splitlines():
        tokens = line.split()
        if not tokens or tokens[0] != "V":
            continue
        if tokens[-1] != "0":
            raise SolverOutputError(f"Assignment line is not terminated by 0: '{line}'")
        for token in tokens[1:-1]:
            try:
                lit = int(token)
            except ValueError:
                raise SolverOutputError(f"Bad literal '{token}' in assignment line") from None
            if abs(lit) in outer_set:
                model[abs(lit)] = lit > 0
    if not model:
        return None
    missing = outer_set - model.keys()
    if missing:
        raise SolverOutputError(f"Assignment lines miss outer variables {sorted(missing)[:10]}")
    return model


def solve_external(q: QbfInstance, solver_path: str,
                   budget: "float | Deadline | None" = None) -> QbfResult:
    deadline = Deadline.of(budget)
    proc = run_solver_process(solver_path, q.to_qdimacs(), ".qdimacs", deadline)
    if proc.returncode == 20:
        return QBF_FALSE
    if proc.returncode != 10:
        raise SolverProtocolError(f"QBF solver '{solver_path}' exited with code {proc.returncode}")
    model = parse_outer_model(proc.stdout, q.outer_exists)
    if model is None:
        return QbfResult(QbfStatus.TRUE_WITHOUT_MODEL)
    return QbfResult(QbfStatus.TRUE, model)


def verify_outer_model(q: QbfInstance, outer_model: Mapping[int, bool], cap: int | None = None,
                       sat_backend: SatBackend | None = None,
                       budget: "float | Deadline | None" = None) -> bool:
    """True iff every universal assignment leaves a satisfiable inner problem."""
    _check_cap(q, cap)
    deadline = Deadline.of(budget)
    backend = sat_backend or SatBackend()
    for tau in _universal_assignments(q.universals):
        fixed = {**outer_model, **tau}
        inner = Cnf(num_vars=q.matrix.num_vars)
        for clause in q.matrix.clauses:
            instantiated = _instantiate(clause, fixed)
            if instantiated is None:
                continue
            if not instantiated:
                return False
            inner.clauses.append(instantiated)
        if not backend.solve(inner, deadline).satisfiable:
            return False
    return True


@dataclass(frozen=True)
class QbfBackend:
    """``internal`` (universal expansion) | ``external:PATH``."""
    kind: str = "internal"
    path: str | None = None
    sat: SatBackend = SatBackend()
    cap: int | None = None

    @classmethod
    def parse(cls, text: str, sat: SatBackend | None = None, cap: int | None = None) -> "QbfBackend":
        kind, _, path = text.partition(":")
        if kind == "internal" and not path:
            return cls("internal", None, sat or SatBackend(), cap)
        if kind == "external" and path:
            return cls("external", path, sat or SatBackend(), cap)
        raise ConfigError(f"Unknown QBF backend '{text}' (expected internal or external:PATH)")

    def solve(self, q: QbfInstance, budget: "float | Deadline | None" = None) -> QbfResult:
        if self.kind == "external":
            return solve_external(q, self.path, budget)
        return solve_expansion(q, budget, cap=self.cap, sat_backend=self.sat)

    def __str__(self) -> str:
        return self.kind if self.path is None else f"{self.kind}:{self.path}"
