import itertools
import os
import random
import textwrap

import pytest

from src.cnf import Cnf
from src.errors import (ConfigError, ModelVerificationError, SolverOutputError, SolverProtocolError,
                        SolverSpawnError, SolverTimeout)
from src.sat import (CdclSolver, Deadline, SatBackend, luby, parse_model_lines, solve, solve_external,
                     verify_model)


def brute_sat(cnf: Cnf) -> bool:
    for values in itertools.product((False, True), repeat=cnf.num_vars):
        model = dict(enumerate(values, 1))
        if all(any(model[abs(l)] == (l > 0) for l in c) for c in cnf.clauses):
            return True
    return False


def random_cnf(rng, num_vars, num_clauses, width=3):
    cnf = Cnf(num_vars)
    for _ in range(num_clauses):
        cnf.add(v if rng.random() < 0.5 else -v for v in rng.sample(range(1, num_vars + 1), width))
    return cnf


def pigeonhole(holes):
    pigeons = holes + 1
    var = lambda i, j: i * holes + j + 1
    cnf = Cnf(pigeons * holes)
    for i in range(pigeons):
        cnf.add(var(i, j) for j in range(holes))
    for j in range(holes):
        for a, b in itertools.combinations(range(pigeons), 2):
            cnf.add([-var(a, j), -var(b, j)])
    return cnf


def test_trivial_instances():
    assert solve(Cnf()).satisfiable
    assert not solve(Cnf(1, [[]])).satisfiable
    assert not solve(Cnf(1, [[1], [-1]])).satisfiable
    result = solve(Cnf(2, [[1, 2], [-1], [2, -2]]))
    assert result.satisfiable and result.model == {1: False, 2: True}
    assert result.value(2) and result.value(-1)


def test_unused_variables_get_values():
    result = solve(Cnf(5, [[3]]))
    assert set(result.model) == {1, 2, 3, 4, 5}


@pytest.mark.parametrize("holes", [2, 3, 4])
def test_pigeonhole_is_unsat(holes):
    assert not solve(pigeonhole(holes)).satisfiable


def test_agrees_with_brute_force_on_random_3sat():
    rng = random.Random(5)
    for _ in range(150):
        cnf = random_cnf(rng, 8, rng.randint(20, 45))
        result = solve(cnf, seed=rng.randrange(100))
        assert result.satisfiable == brute_sat(cnf)
        if result.satisfiable:
            verify_model(cnf, result.model)


def test_same_seed_gives_same_verdict_and_model():
    rng = random.Random(13)
    for _ in range(30):
        cnf = random_cnf(rng, 20, rng.randint(60, 95))
        for seed in (0, 7):
            first, second = solve(cnf, seed=seed), solve(cnf, seed=seed)
            assert first.satisfiable == second.satisfiable
            assert first.model == second.model


def test_larger_random_instances_return_valid_models():
    rng = random.Random(9)
    for _ in range(5):
        cnf = random_cnf(rng, 60, 220)
        solver = CdclSolver(cnf)
        result = solver.solve()
        if result.satisfiable:
            verify_model(cnf, result.model)
        assert solver.conflicts >= 0


def test_verify_model_rejects_falsifying_model():
    with pytest.raises(ModelVerificationError):
        verify_model(Cnf(2, [[1, 2]]), {1: False, 2: False})


def test_luby_sequence():
    assert [luby(2, i) for i in range(15)] == [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]


def test_deadline():
    deadline = Deadline(0.0)
    assert deadline.expired()
    with pytest.raises(SolverTimeout) as info:
        deadline.check()
    assert info.value.elapsed >= 0
    assert Deadline().remaining() is None
    assert Deadline.of(deadline) is deadline


def test_solve_honours_budget():
    with pytest.raises(SolverTimeout):
        solve(random_cnf(random.Random(1), 30, 100), budget=0.0)


# --- external solvers --------------------------------------------------------

@pytest.fixture
def fake_solver(tmp_path):
    """Executable shell script standing in for a DIMACS solver."""
    def make(body: str, name: str = "solver.sh"):
        path = tmp_path / name
        path.write_text("#!/bin/sh\n" + textwrap.dedent(body))
        os.chmod(path, 0o755)
        return str(path)
    return make


def test_external_sat(fake_solver):
    path = fake_solver("""
        echo "s SATISFIABLE"
        echo "v 1 -2"
        echo "v 3 0"
        exit 10
    """)
    result = solve_external(Cnf(3, [[1], [-2], [3]]), path)
    assert result.model == {1: True, 2: False, 3: True}


def test_external_missing_variables_default_to_false(fake_solver):
    path = fake_solver('echo "v 1 0"\nexit 10\n')
    assert solve_external(Cnf(3, [[1, 2]]), path).model == {1: True, 2: False, 3: False}


def test_external_unsat(fake_solver):
    assert not solve_external(Cnf(1, [[1], [-1]]), fake_solver("exit 20\n")).satisfiable


def test_external_receives_dimacs_file(fake_solver, tmp_path):
    copy = tmp_path / "seen.cnf"
    path = fake_solver(f'cp "$1" "{copy}"\nexit 20\n')
    solve_external(Cnf(2, [[1, -2]]), path)
    assert copy.read_text().splitlines() == ["p cnf 2 1", "1 -2 0"]


@pytest.mark.parametrize("body, error", [
    ("exit 0\n", SolverProtocolError),
    ('echo "v 1"\nexit 10\n', SolverOutputError),
    ("exit 10\n", SolverOutputError),
    ('echo "v -1 0"\nexit 10\n', SolverOutputError),
])
def test_external_failures(fake_solver, body, error):
    with pytest.raises(error):
        solve_external(Cnf(1, [[1]]), fake_solver(body))


def test_external_spawn_failure(tmp_path):
    with pytest.raises(SolverSpawnError):
        solve_external(Cnf(1, [[1]]), str(tmp_path / "missing"))


def test_external_timeout(fake_solver):
    path = fake_solver("sleep 5\nexit 20\n")
    with pytest.raises(SolverTimeout):
        solve_external(Cnf(1, [[1]]), path, budget=0.2)


def test_parse_model_lines():
    assert parse_model_lines("c hi\nv 1 -3 0\n", 3) == {1: True, 3: False}
    with pytest.raises(SolverOutputError):
        parse_model_lines("v 1 0\nv 2 0\n", 3)
    with pytest.raises(SolverOutputError):
        parse_model_lines("v 7 0\n", 3)


def test_backend_parsing():
    assert SatBackend.parse("internal") == SatBackend("internal", None, 0)
    assert SatBackend.parse("pysat").target == "glucose3"
    assert SatBackend.parse("pysat:cadical153").target == "cadical153"
    assert str(SatBackend.parse("external:/bin/solver")) == "external:/bin/solver"
    for text in ("", "external", "minisat", "internal:x"):
        with pytest.raises(ConfigError):
            SatBackend.parse(text)


def test_pysat_backend_agrees():
    pytest.importorskip("pysat.solvers")
    backend = SatBackend.parse("pysat")
    rng = random.Random(17)
    for _ in range(50):
        cnf = random_cnf(rng, 10, rng.randint(30, 55))
        assert backend.solve(cnf).satisfiable == solve(cnf).satisfiable
    assert not backend.solve(pigeonhole(4)).satisfiable
