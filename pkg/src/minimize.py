"""Three minimization algorithms: brute force, SAT-based, and QBF scheme search.

Brute force and SAT-based walk the candidate stream of :mod:`enumeration`
size by size and return the first candidate equivalent to the input; they
differ only in how equivalence is decided (packed truth tables versus an
unsatisfiability check of two Tseitin encodings).

QBF scheme search asks, per depth, whether some formula fitting a complete
binary template is equivalent to the input::

    exists selectors . forall formula-variables . exists node-values . matrix

and decodes the formula from the outer existential model.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import reduce
from itertools import count
from typing import Mapping, Sequence

from .cnf import (Clause, VarAllocator, at_most_k, equivalence_cnf, exactly_one, gate_clauses,
                  guarded, iff_clauses, tseitin)
from .enumeration import Enumerator, FormulaSpace
from .errors import (InconsistentModelError, MissingOuterModelError,
                     ModelVerificationError, SolverTimeout, UnsoundResultError)
from .formula import (FALSE, Bin, ConstFalse, Connective, Formula, Not, Var, connectives, depth,
                      equivalent_tt, mask_index, size, table_bits, uses, variables)
from .models import Algorithm, MinimizeConfig, QbfMode, RunStatus
from .qbf import QbfBackend, QbfInstance, QbfResult, QbfStatus, verify_outer_model
from .sat import Deadline, SatBackend

logger = logging.getLogger(__name__)

DUMMY = "dummy"
NEGATION = "not"


@dataclass
class MinimizationResult:
    algorithm: Algorithm
    input: Formula
    output: Formula | None
    status: RunStatus
    candidates_tested: int = 0
    solver_calls: int = 0
    elapsed: float = 0.0
    depth: int | None = None

    @property
    def ok(self) -> bool:
        return self.status is RunStatus.OK

    @property
    def output_size(self) -> int | None:
        return None if self.output is None else size(self.output)


class _Run:
    """Counters, deadline and result checks shared by one minimization call."""

    def __init__(self, phi: Formula, algorithm: Algorithm, cfg: MinimizeConfig):
        self.phi = phi
        self.algorithm = algorithm
        self.cfg = cfg
        self.deadline = Deadline(cfg.timeout)
        self.candidates = 0
        self.solver_calls = 0
        self.depth: int | None = None
        self.in_space = in_output_space(phi, cfg)
        self.reachable = self.in_space or expressible(phi, cfg)

    def sizes(self):
        """Candidate sizes to try: up to size(phi) inside the output space, unbounded outside it."""
        return range(1, size(self.phi) + 1) if self.in_space else count(1)

    def finish(self, psi: Formula) -> MinimizationResult:
        if not equivalent_tt(self.phi, psi, self.cfg.truth_table_cap):
            raise UnsoundResultError(f"{self.algorithm.value} returned '{psi}', not equivalent to '{self.phi}'")
        if self.in_space and size(psi) > size(self.phi):
            raise UnsoundResultError(f"{self.algorithm.value} returned a larger formula '{psi}'")
        logger.info("%s: %s -> %s (%.3fs)", self.algorithm.value, self.phi, psi, self.deadline.elapsed())
        return self._result(psi, RunStatus.OK)

    def keep_input(self) -> MinimizationResult:
        logger.warning("%s: the output operators cannot express %s, keeping the input",
                       self.algorithm.value, self.phi)
        return self._result(self.phi, RunStatus.OK)

    def timed_out(self) -> MinimizationResult:
        logger.info("%s: timeout after %.3fs on %s", self.algorithm.value, self.deadline.elapsed(), self.phi)
        return self._result(None, RunStatus.TIMEOUT)

    def _result(self, psi: Formula | None, status: RunStatus) -> MinimizationResult:
        return MinimizationResult(self.algorithm, self.phi, psi, status, self.candidates,
                                  self.solver_calls, self.deadline.elapsed(), self.depth)


def output_space(phi: Formula, cfg: MinimizeConfig) -> FormulaSpace:
    return FormulaSpace(tuple(sorted(variables(phi))), tuple(cfg.output_connectives),
                        allow_not=cfg.allow_not, allow_false=cfg.allow_false_leaf)


def in_output_space(phi: Formula, cfg: MinimizeConfig) -> bool:
    return (connectives(phi) <= set(cfg.output_connectives)
            and (cfg.allow_not or not uses(phi, Not))
            and (cfg.allow_false_leaf or not uses(phi, ConstFalse)))


def _monotone(bits: int, masks: Sequence[int], full: int) -> bool:
    n = len(masks)
    for k, mask in enumerate(masks):
        shift = 1 << (n - 1 - k)
        # every row with variable k false must imply its partner row with k true
        if ((bits & ~mask & full) << shift) & ~bits & full:
            return False
    return True


def expressible(phi: Formula, cfg: MinimizeConfig) -> bool:
    """Whether some formula of the output space over ``vars(phi)`` is equivalent to ``phi``.

    Decided on the truth table by the clone the output operators generate:
    Not with any connective, or Implies with false, is complete; Implies alone
    keeps the all-true row true; And/Or give the monotone functions that keep
    the all-false row false (and the all-true row true without false); a lone
    And or Or gives conjunctions or disjunctions of variables; Not alone gives
    literals.
    """
    if in_output_space(phi, cfg):
        return True
    names = sorted(variables(phi))
    if not names and not cfg.allow_false_leaf:
        return False
    index, full = mask_index(names, cfg.truth_table_cap)
    masks = [index[name] for name in names]
    bits = table_bits(phi, index, full)
    conns = set(cfg.output_connectives)
    false_ok = cfg.allow_false_leaf and bits == 0

    if conns and cfg.allow_not:
        return True
    if Connective.IMPLIES in conns:
        return cfg.allow_false_leaf or bool(bits >> full.bit_length() - 1)
    if not conns:
        constant = bits in (0, full) and cfg.allow_false_leaf
        return constant or any(bits in (m, ~m & full) for m in masks)
    if conns == {Connective.AND}:
        kept = [m for m in masks if bits & ~m & full == 0]
        return false_ok or (bool(kept) and bits == reduce(lambda a, b: a & b, kept, full))
    if conns == {Connective.OR}:
        kept = [m for m in masks if m & ~bits == 0]
        return false_ok or (bool(kept) and bits == reduce(lambda a, b: a | b, kept, 0))
    if bits & 1 or not _monotone(bits, masks, full):
        return False
    return false_ok or (bool(names) and bool(bits >> full.bit_length() - 1))


# --- Candidate search --------------------------------------------------------

def _candidate_search(run: _Run, is_equivalent) -> MinimizationResult:
    if not run.reachable:
        return run.keep_input()
    enumerator = Enumerator(output_space(run.phi, run.cfg))
    try:
        for i in run.sizes():
            logger.debug("%s: trying size %d", run.algorithm.value, i)
            run.deadline.check()
            for psi in enumerator.stream(i):
                run.candidates += 1
                if run.candidates % 64 == 0:
                    run.deadline.check()
                if is_equivalent(psi):
                    return run.finish(psi)
    except SolverTimeout:
        return run.timed_out()
    raise UnsoundResultError(f"{run.algorithm.value} found no equivalent of '{run.phi}' up to its own size")


def minimize_bruteforce(phi: Formula, cfg: MinimizeConfig | None = None) -> MinimizationResult:
    cfg = cfg or MinimizeConfig()
    run = _Run(phi, Algorithm.BRUTE, cfg)
    index, full = mask_index(sorted(variables(phi)), cfg.truth_table_cap)
    target = table_bits(phi, index, full)
    return _candidate_search(run, lambda psi: table_bits(psi, index, full) == target)


def minimize_sat(phi: Formula, cfg: MinimizeConfig | None = None) -> MinimizationResult:
    cfg = cfg or MinimizeConfig()
    run = _Run(phi, Algorithm.SAT, cfg)
    mask_index(sorted(variables(phi)), cfg.truth_table_cap)
    backend = SatBackend.parse(cfg.sat_solver, seed=cfg.seed)

    def is_equivalent(psi: Formula) -> bool:
        run.solver_calls += 1
        return not backend.solve(equivalence_cnf(phi, psi), run.deadline).satisfiable

    return _candidate_search(run, is_equivalent)


# --- Scheme ------------------------------------------------------------------

@dataclass
class SchemeNode:
    position: int
    value: int
    dummy: int
    is_leaf: bool
    false: int | None = None
    negation: int | None = None
    leaves: dict[str, int] = field(default_factory=dict)
    gates: dict[Connective, int] = field(default_factory=dict)

    def selectors(self) -> list[tuple[object, int]]:
        """(label, variable) pairs; labels are FALSE, DUMMY, NEGATION, Var or Connective."""
        pairs: list[tuple[object, int]] = []
        if self.false is not None:
            pairs.append((FALSE, self.false))
        pairs.append((DUMMY, self.dummy))
        if self.negation is not None:
            pairs.append((NEGATION, self.negation))
        pairs += [(Var(name), x) for name, x in self.leaves.items()]
        pairs += list(self.gates.items())
        return pairs


@dataclass
class Scheme:
    """Complete binary template; node ``i`` has children ``2i`` and ``2i+1``."""
    depth: int
    nodes: dict[int, SchemeNode]

    @property
    def root(self) -> SchemeNode:
        return self.nodes[1]

    def selector_vars(self) -> list[int]:
        return [x for node in self.nodes.values() for _, x in node.selectors()]

    def value_vars(self) -> list[int]:
        return [node.value for node in self.nodes.values()]


def build_scheme(delta: int, universals: Mapping[str, int], cfg: MinimizeConfig,
                 alloc: VarAllocator, forbid_root_dummy: bool = True) -> tuple[Scheme, list[Clause]]:
    if delta < 0:
        raise ValueError(f"Scheme depth must be non-negative, got {delta}")
    conns = [c for c in Connective if c in set(cfg.output_connectives)]
    first_leaf = 1 << delta
    nodes: dict[int, SchemeNode] = {}
    for pos in range(1, 2 * first_leaf):
        is_leaf = pos >= first_leaf
        node = SchemeNode(pos, alloc.fresh(f"z{pos}"), alloc.fresh(f"x{pos}_dummy"), is_leaf)
        if cfg.allow_false_leaf:
            node.false = alloc.fresh(f"x{pos}_false")
        if not is_leaf and cfg.allow_not:
            node.negation = alloc.fresh(f"x{pos}_not")
        for name in universals:
            node.leaves[name] = alloc.fresh(f"x{pos}_{name}")
        if not is_leaf:
            for conn in conns:
                node.gates[conn] = alloc.fresh(f"x{pos}_{conn.name.lower()}")
        nodes[pos] = node

    clauses: list[Clause] = []
    for pos, node in nodes.items():
        z = node.value
        if node.false is not None:
            clauses.append([-node.false, -z])
        for name, x in node.leaves.items():
            clauses += guarded(x, iff_clauses(z, universals[name]))
        clauses += exactly_one([x for _, x in node.selectors()])
        if node.is_leaf:
            continue
        left, right = nodes[2 * pos], nodes[2 * pos + 1]
        if node.negation is not None:
            clauses += guarded(node.negation, [[-z, -left.value], [z, left.value]])
            clauses.append([-node.negation, right.dummy])
            clauses.append([-node.negation, -left.dummy])
        for conn, x in node.gates.items():
            clauses += guarded(x, gate_clauses(z, conn, left.value, right.value))
            clauses.append([-x, -left.dummy])
            clauses.append([-x, -right.dummy])
        unused = [node.dummy, *node.leaves.values()]
        if node.false is not None:
            unused.append(node.false)
        for x in unused:
            clauses.append([-x, left.dummy])
            clauses.append([-x, right.dummy])
    if forbid_root_dummy:
        clauses.append([-nodes[1].dummy])
    return Scheme(delta, nodes), clauses


def scheme_instance(phi: Formula, delta: int, size_bound: int | None = None,
                    cfg: MinimizeConfig | None = None,
                    forbid_root_dummy: bool = True) -> tuple[QbfInstance, Scheme]:
    cfg = cfg or MinimizeConfig()
    alloc = VarAllocator()
    universals = {name: alloc.var(name) for name in sorted(variables(phi))}
    scheme, clauses = build_scheme(delta, universals, cfg, alloc, forbid_root_dummy)
    z_input = alloc.fresh("z_input")
    matrix = tseitin(phi, z_input, alloc)
    matrix.extend(clauses)
    matrix.extend(iff_clauses(z_input, scheme.root.value))
    if size_bound is not None:
        if size_bound < 0:
            raise ValueError(f"Size bound must be non-negative, got {size_bound}")
        not_dummy = [-node.dummy for node in scheme.nodes.values()]
        matrix.extend(at_most_k(not_dummy, min(size_bound, len(not_dummy)), alloc))
    matrix.num_vars = alloc.num_vars

    outer = tuple(scheme.selector_vars())
    uni = tuple(universals.values())
    taken = set(outer) | set(uni)
    inner = tuple(v for v in range(1, alloc.num_vars + 1) if v not in taken)
    return QbfInstance(outer, uni, inner, matrix), scheme


@dataclass
class SchemeAnswer:
    instance: QbfInstance
    scheme: Scheme
    result: QbfResult

    @property
    def is_true(self) -> bool:
        return self.result.is_true

    @property
    def formula(self) -> Formula | None:
        if not self.is_true:
            return None
        return decode_scheme(self.scheme, self.result.outer_model)


def equivalent_qbf(phi: Formula, delta: int, size_bound: int | None = None,
                   cfg: MinimizeConfig | None = None, backend: QbfBackend | None = None,
                   budget: "float | Deadline | None" = None) -> SchemeAnswer:
    cfg = cfg or MinimizeConfig()
    backend = backend or _qbf_backend(cfg)
    deadline = Deadline.of(cfg.timeout if budget is None else budget)
    instance, scheme = scheme_instance(phi, delta, size_bound, cfg)
    logger.debug("Scheme depth %d, bound %s: %d clauses, %d/%d/%d block sizes", delta, size_bound,
                 len(instance.matrix), len(instance.outer_exists), len(instance.universals),
                 len(instance.inner_exists))
    result = backend.solve(instance, deadline)
    if result.status is QbfStatus.TRUE_WITHOUT_MODEL:
        raise MissingOuterModelError(
            f"QBF backend '{backend}' proved the instance true without reporting outer assignments")
    if result.is_true and cfg.verify_models:
        if not verify_outer_model(instance, result.outer_model, cfg.expansion_cap, backend.sat, deadline):
            raise ModelVerificationError("Outer model does not survive every universal assignment")
    return SchemeAnswer(instance, scheme, result)


def decode_scheme(scheme: Scheme, outer_model: Mapping[int, bool]) -> Formula:
    def visit(pos: int) -> Formula:
        node = scheme.nodes.get(pos)
        if node is None:
            raise InconsistentModelError(f"Model selects a child below the scheme at node {pos}")
        chosen = [label for label, x in node.selectors() if outer_model.get(x, False)]
        if len(chosen) != 1:
            raise InconsistentModelError(f"Node {pos} has {len(chosen)} selectors set")
        label = chosen[0]
        if isinstance(label, Connective):
            return Bin(label, visit(2 * pos), visit(2 * pos + 1))
        if label == NEGATION:
            return Not(visit(2 * pos))
        if label == DUMMY:
            raise InconsistentModelError(f"Node {pos} is dummy but used")
        return label

    return visit(1)


def _qbf_backend(cfg: MinimizeConfig) -> QbfBackend:
    return QbfBackend.parse(cfg.qbf_solver, SatBackend.parse(cfg.sat_solver, seed=cfg.seed),
                            cfg.expansion_cap)


def minimize_qbf(phi: Formula, cfg: MinimizeConfig | None = None) -> MinimizationResult:
    cfg = cfg or MinimizeConfig()
    algorithm = Algorithm.QBF_FAST if cfg.qbf_mode is QbfMode.FAST else Algorithm.QBF_EXACT
    run = _Run(phi, algorithm, cfg)
    if not run.reachable:
        return run.keep_input()
    backend = _qbf_backend(cfg)

    def ask(delta: int, bound: int | None) -> Formula | None:
        run.solver_calls += 1
        logger.debug("%s: depth %d, size bound %s", algorithm.value, delta, bound)
        return equivalent_qbf(phi, delta, bound, cfg, backend, run.deadline).formula

    try:
        if cfg.qbf_mode is QbfMode.FAST:
            best = None
            # phi itself fits at its own depth when it lies in the output space
            depths = range(depth(phi) + 1) if run.in_space else count(0)
            for delta in depths:
                best = ask(delta, None)
                if best is not None:
                    run.depth = delta
                    break
            while size(best) > 1:
                tighter = ask(run.depth, size(best) - 1)
                if tighter is None:
                    break
                best = tighter
            return run.finish(best)

        for k in run.sizes():
            # a formula of size k has depth at most k - 1; the cap binds inside the output space only
            delta = min(k - 1, cfg.depth_cap) if run.in_space else k - 1
            found = ask(delta, k)
            if found is not None:
                run.depth = delta
                return run.finish(found)
        logger.info("%s: no equivalent within depth cap %d, keeping the input",
                    algorithm.value, cfg.depth_cap)
        return run.finish(phi)
    except SolverTimeout:
        return run.timed_out()
