import itertools
import random

import pytest

from src.cnf import Cnf
from src.enumeration import instance_space, sample_uniform
from src.qbf import QbfInstance


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="Run the acceptance-scale tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def _satisfied(clauses, assignment):
    return all(any(assignment[abs(lit)] == (lit > 0) for lit in clause) for clause in clauses)


def brute_qbf(q: QbfInstance) -> bool:
    """Triple loop over outer, universal and inner assignments."""
    clauses = q.matrix.clauses
    for outer in itertools.product((False, True), repeat=len(q.outer_exists)):
        fixed = dict(zip(q.outer_exists, outer))
        survives = True
        for uni in itertools.product((False, True), repeat=len(q.universals)):
            fixed.update(zip(q.universals, uni))
            if not any(_satisfied(clauses, {**fixed, **dict(zip(q.inner_exists, inner))})
                       for inner in itertools.product((False, True), repeat=len(q.inner_exists))):
                survives = False
                break
        if survives:
            return True
    return False


def random_qbf(rng: random.Random, max_block: int = 4, max_clauses: int = 12) -> QbfInstance:
    sizes = [rng.randint(0, max_block) for _ in range(3)]
    if sum(sizes) == 0:
        sizes[rng.randrange(3)] = 1
    variables = list(range(1, sum(sizes) + 1))
    outer = tuple(variables[:sizes[0]])
    uni = tuple(variables[sizes[0]:sizes[0] + sizes[1]])
    inner = tuple(variables[sizes[0] + sizes[1]:])
    matrix = Cnf(num_vars=len(variables))
    for _ in range(rng.randint(1, max_clauses)):
        width = rng.randint(1, min(3, len(variables)))
        matrix.add(v if rng.random() < 0.5 else -v for v in rng.sample(variables, width))
    return QbfInstance(outer, uni, inner, matrix)


@pytest.fixture
def rng():
    return random.Random(20240917)


@pytest.fixture
def random_instance_formula():
    """Uniform formula of the benchmark input space: round(sqrt(s)) variables, Not/And/Or."""
    def draw(rng: random.Random, size: int):
        return sample_uniform(instance_space(size), size, rng)
    return draw


@pytest.fixture
def qbf_oracle():
    return brute_qbf


@pytest.fixture
def qbf_generator():
    return random_qbf
