"""Satisfiability checking: an embedded CDCL engine plus external adapters.

The embedded engine uses two watched literals, first-UIP learning, VSIDS
activities with phase saving, Luby restarts, and halves the learned clause
database once it grows past ``MAX_LEARNTS``. Every model is checked against
the input clauses before it is returned.
"""
from __future__ import annotations

import heapq
import logging
import os
import random
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass
from enum import Enum

from .cnf import Cnf, write_dimacs
from .errors import (ModelVerificationError, SolverOutputError, SolverProtocolError,
                     SolverSpawnError, SolverTimeout, ConfigError)

logger = logging.getLogger(__name__)

RESTART_UNIT = 100
VAR_DECAY = 0.95
MAX_LEARNTS = 10_000


class Deadline:
    """Monotonic time budget shared by nested solver calls."""

    def __init__(self, budget: float | None = None):
        self.start = time.monotonic()
        self.budget = budget
        self.end = None if budget is None else self.start + budget

    @classmethod
    def of(cls, budget: "float | Deadline | None") -> "Deadline":
        return budget if isinstance(budget, Deadline) else cls(budget)

    def elapsed(self) -> float:
        return time.monotonic() - self.start

    def remaining(self) -> float | None:
        return None if self.end is None else max(0.0, self.end - time.monotonic())

    def expired(self) -> bool:
        return self.end is not None and time.monotonic() >= self.end

    def check(self) -> None:
        if self.expired():
            raise SolverTimeout(self.elapsed())


class SatStatus(str, Enum):
    SAT = "sat"
    UNSAT = "unsat"


@dataclass(frozen=True)
class SatResult:
    status: SatStatus
    model: dict[int, bool] | None = None

    @property
    def satisfiable(self) -> bool:
        return self.status is SatStatus.SAT

    def value(self, lit: int) -> bool:
        if self.model is None:
            raise ValueError("No model for an unsatisfiable result")
        return self.model[abs(lit)] == (lit > 0)


UNSAT = SatResult(SatStatus.UNSAT)


def verify_model(cnf: Cnf, model: dict[int, bool]) -> None:
    for clause in cnf.clauses:
        if not any(model.get(abs(lit), False) == (lit > 0) for lit in clause):
            raise ModelVerificationError(f"Model falsifies clause {clause}")


def luby(y: float, x: int) -> float:
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return y ** seq


class CdclSolver:
    # Literal codes: variable v positive -> 2v, negative -> 2v + 1.

    def __init__(self, cnf: Cnf, seed: int = 0):
        self.cnf = cnf
        n = cnf.num_vars + 1
        self.num_vars = cnf.num_vars
        self._assign = [-1] * n
        self._level = [0] * n
        self._reason = [-1] * n
        self._phase = [0] * n
        self._seen = [False] * n
        rng = random.Random(seed)
        # tiny seeded activities break ties deterministically
        self._activity = [rng.random() * 1e-5 for _ in range(n)]
        self._var_inc = 1.0
        self._heap = [(-self._activity[v], v) for v in range(1, n)]
        heapq.heapify(self._heap)

        self._clauses: list[list[int] | None] = []
        self._learnts: list[int] = []
        self._watches: list[list[int]] = [[] for _ in range(2 * n)]
        self._trail: list[int] = []
        self._trail_lim: list[int] = []
        self._qhead = 0
        self._ok = True

        self.conflicts = 0
        self.decisions = 0
        self.restarts = 0

        for clause in cnf.clauses:
            self._add_input_clause(clause)

    # --- clause database ---

    def _add_input_clause(self, clause: list[int]) -> None:
        if not self._ok:
            return
        codes = list(dict.fromkeys(2 * abs(l) + (l < 0) for l in clause))
        if any(c ^ 1 in codes for c in codes):
            return
        if not codes:
            self._ok = False
        elif len(codes) == 1:
            value = self._lit_value(codes[0])
            if value == 0:
                self._ok = False
            elif value < 0:
                self._enqueue(codes[0], -1)
        else:
            self._attach(codes)

    def _attach(self, codes: list[int]) -> int:
        ci = len(self._clauses)
        self._clauses.append(codes)
        self._watches[codes[0]].append(ci)
        self._watches[codes[1]].append(ci)
        return ci

    def _lit_value(self, code: int) -> int:
        a = self._assign[code >> 1]
        return -1 if a < 0 else a ^ (code & 1)

    def _enqueue(self, code: int, reason: int) -> None:
        v = code >> 1
        self._assign[v] = 1 ^ (code & 1)
        self._level[v] = len(self._trail_lim)
        self._reason[v] = reason
        self._trail.append(code)

    # --- propagation ---

    def _propagate(self) -> int:
        assign = self._assign
        clauses = self._clauses
        watches = self._watches
        trail = self._trail
        while self._qhead < len(trail):
            p = trail[self._qhead]
            self._qhead += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            end = len(ws)
            while i < end:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                a = assign[first >> 1]
                if a >= 0 and a ^ (first & 1) == 1:
                    ws[j] = ci
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    ak = assign[lk >> 1]
                    if ak < 0 or ak ^ (lk & 1) == 1:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk].append(ci)
                        break
                else:
                    ws[j] = ci
                    j += 1
                    if a >= 0:
                        while i < end:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        self._qhead = len(trail)
                        return ci
                    self._enqueue(first, ci)
            del ws[j:]
        return -1

    # --- conflict analysis ---

    def _bump(self, v: int) -> None:
        self._activity[v] += self._var_inc
        if self._activity[v] > 1e100:
            self._activity = [a * 1e-100 for a in self._activity]
            self._var_inc *= 1e-100
            self._heap = [(-self._activity[u], u) for u in range(1, self.num_vars + 1)
                          if self._assign[u] < 0]
            heapq.heapify(self._heap)

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        seen = self._seen
        level = self._level
        trail = self._trail
        current = len(self._trail_lim)
        learnt = [0]
        counter = 0
        p = -1
        idx = len(trail) - 1
        ci = confl
        while True:
            c = self._clauses[ci]
            for k in range(0 if p < 0 else 1, len(c)):
                q = c[k]
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if level[v] >= current:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            seen[p >> 1] = False
            counter -= 1
            if counter == 0:
                break
            ci = self._reason[p >> 1]
        learnt[0] = p ^ 1
        for q in learnt[1:]:
            seen[q >> 1] = False

        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda k: level[learnt[k] >> 1])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[learnt[1] >> 1]

    def _cancel_until(self, target: int) -> None:
        if len(self._trail_lim) <= target:
            return
        lim = self._trail_lim[target]
        for code in reversed(self._trail[lim:]):
            v = code >> 1
            self._phase[v] = self._assign[v]
            self._assign[v] = -1
            self._reason[v] = -1
            heapq.heappush(self._heap, (-self._activity[v], v))
        del self._trail[lim:]
        del self._trail_lim[target:]
        self._qhead = lim

    def _reduce_learnts(self) -> None:
        locked = {self._reason[code >> 1] for code in self._trail}
        ranked = sorted(self._learnts, key=lambda ci: len(self._clauses[ci]), reverse=True)
        drop = {ci for ci in ranked[: len(ranked) // 2] if ci not in locked}
        for ci in drop:
            self._clauses[ci] = None
        self._learnts = [ci for ci in self._learnts if ci not in drop]
        for ws in self._watches:
            ws.clear()
        for ci, c in enumerate(self._clauses):
            if c is not None:
                self._watches[c[0]].append(ci)
                self._watches[c[1]].append(ci)
        logger.debug("Learned clause database reduced by %d", len(drop))

    # --- search ---

    def _pick_branch(self) -> int:
        heap = self._heap
        while heap:
            key, v = heapq.heappop(heap)
            if self._assign[v] < 0 and -key == self._activity[v]:
                return v
        return 0

    def _search(self, conflict_limit: int, deadline: Deadline) -> SatStatus | None:
        local_conflicts = 0
        while True:
            confl = self._propagate()
            if confl >= 0:
                self.conflicts += 1
                local_conflicts += 1
                if not self._trail_lim:
                    return SatStatus.UNSAT
                learnt, back_level = self._analyze(confl)
                self._cancel_until(back_level)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], -1)
                else:
                    ci = self._attach(learnt)
                    self._learnts.append(ci)
                    self._enqueue(learnt[0], ci)
                self._var_inc /= VAR_DECAY
                if self.conflicts % 64 == 0:
                    deadline.check()
                continue

            if local_conflicts >= conflict_limit:
                self._cancel_until(0)
                return None
            if len(self._learnts) - len(self._trail) >= MAX_LEARNTS:
                self._reduce_learnts()
            v = self._pick_branch()
            if v == 0:
                return SatStatus.SAT
            self.decisions += 1
            if self.decisions % 256 == 0:
                deadline.check()
            self._trail_lim.append(len(self._trail))
            self._enqueue(2 * v + (0 if self._phase[v] == 1 else 1), -1)

    def solve(self, budget: "float | Deadline | None" = None) -> SatResult:
        deadline = Deadline.of(budget)
        if not self._ok or self._propagate() >= 0:
            return UNSAT
        while True:
            deadline.check()
            status = self._search(int(luby(2, self.restarts) * RESTART_UNIT), deadline)
            if status is SatStatus.UNSAT:
                return UNSAT
            if status is SatStatus.SAT:
                model = {v: self._assign[v] == 1 for v in range(1, self.num_vars + 1)}
                verify_model(self.cnf, model)
                return SatResult(SatStatus.SAT, model)
            self.restarts += 1


def solve(cnf: Cnf, budget: "float | Deadline | None" = None, seed: int = 0) -> SatResult:
    return CdclSolver(cnf, seed=seed).solve(budget)


# --- External solvers --------------------------------------------------------

def run_solver_process(solver_path: str, text: str, suffix: str,
                       deadline: Deadline) -> subprocess.CompletedProcess:
    """Write ``text`` to a temporary file and run ``solver_path`` on it."""
    with tempfile.NamedTemporaryFile("w", suffix=suffix, delete=False, encoding="utf-8") as handle:
        handle.write(text)
        path = handle.name
    try:
        return subprocess.run([solver_path, path], capture_output=True, text=True,
                              timeout=deadline.remaining())
    except subprocess.TimeoutExpired:
        raise SolverTimeout(deadline.elapsed()) from None
    except OSError as e:
        raise SolverSpawnError(f"Cannot run solver '{solver_path}': {e}") from None
    finally:
        os.remove(path)


def parse_model_lines(stdout: str, num_vars: int) -> dict[int, bool]:
    """Read ``v`` lines; the last one must end with the 0 terminator."""
    model: dict[int, bool] = {}
    terminated = False
    seen_any = False
    for line in stdout.splitlines():
        if not line.startswith("v"):
            continue
        seen_any = True
        if terminated:
            raise SolverOutputError("Model continues after its 0 terminator")
        for token in line.split()[1:]:
            try:
                lit = int(token)
            except ValueError:
                raise SolverOutputError(f"Bad literal '{token}' in model line") from None
            if lit == 0:
                terminated = True
                break
            if abs(lit) > num_vars:
                raise SolverOutputError(f"Model literal {lit} out of range")
            model[abs(lit)] = lit > 0
    if not seen_any:
        raise SolverOutputError("Solver reported SAT without model lines")
    if not terminated:
        raise SolverOutputError("Model lines are truncated (missing 0 terminator)")
    return model


def solve_external(cnf: Cnf, solver_path: str, budget: "float | Deadline | None" = None) -> SatResult:
    deadline = Deadline.of(budget)
    proc = run_solver_process(solver_path, write_dimacs(cnf), ".cnf", deadline)
    if proc.returncode == 20:
        return UNSAT
    if proc.returncode != 10:
        raise SolverProtocolError(f"Solver '{solver_path}' exited with code {proc.returncode}")
    partial = parse_model_lines(proc.stdout, cnf.num_vars)
    model = {v: partial.get(v, False) for v in range(1, cnf.num_vars + 1)}
    try:
        verify_model(cnf, model)
    except ModelVerificationError as e:
        raise SolverOutputError(f"Solver '{solver_path}' returned a wrong model: {e}") from None
    return SatResult(SatStatus.SAT, model)


def solve_pysat(cnf: Cnf, name: str = "glucose3", budget: "float | Deadline | None" = None) -> SatResult:
    from pysat.solvers import Solver

    deadline = Deadline.of(budget)
    with Solver(name=name, bootstrap_with=cnf.clauses) as solver:
        remaining = deadline.remaining()
        if remaining is None:
            satisfiable = solver.solve()
        else:
            timer = threading.Timer(remaining, solver.interrupt)
            timer.start()
            try:
                satisfiable = solver.solve_limited(expect_interrupt=True)
            finally:
                timer.cancel()
            if satisfiable is None:
                raise SolverTimeout(deadline.elapsed())
        if not satisfiable:
            return UNSAT
        assigned = {abs(lit): lit > 0 for lit in solver.get_model()}
    model = {v: assigned.get(v, False) for v in range(1, cnf.num_vars + 1)}
    verify_model(cnf, model)
    return SatResult(SatStatus.SAT, model)


@dataclass(frozen=True)
class SatBackend:
    """``internal`` | ``pysat[:name]`` | ``external:PATH``."""
    kind: str = "internal"
    target: str | None = None
    seed: int = 0

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "SatBackend":
        kind, _, target = text.partition(":")
        if kind == "internal" and not target:
            return cls("internal", None, seed)
        if kind == "pysat":
            return cls("pysat", target or "glucose3", seed)
        if kind == "external" and target:
            return cls("external", target, seed)
        raise ConfigError(f"Unknown SAT backend '{text}' (expected internal, pysat[:name] or external:PATH)")

    def solve(self, cnf: Cnf, budget: "float | Deadline | None" = None) -> SatResult:
        if self.kind == "external":
            return solve_external(cnf, self.target, budget)
        if self.kind == "pysat":
            return solve_pysat(cnf, self.target, budget)
        return solve(cnf, budget, seed=self.seed)

    def __str__(self) -> str:
        return self.kind if self.target is None else f"{self.kind}:{self.target}"
