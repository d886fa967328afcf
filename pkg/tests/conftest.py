import random

import pytest

from muskit.formula import CnfInstance


def random_instance(rng: random.Random, max_vars: int = 6, max_clauses: int = 12) -> CnfInstance:
    """A random CNF instance (satisfiable or not) for solver cross-checks."""
    n = rng.randint(1, max_vars)
    m = rng.randint(1, max_clauses)
    clauses = []
    for _ in range(m):
        w = rng.randint(1, min(3, n))
        chosen = rng.sample(range(1, n + 1), w)
        clauses.append(tuple(-v if rng.random() < 0.5 else v for v in chosen))
    return CnfInstance(n, tuple(clauses))


@pytest.fixture
def toy_instance() -> CnfInstance:
    """c1=(x), c2=(~x), c3=(x|y): one MUS {c1,c2}, MSSes {c1,c3} and {c2,c3}."""
    return CnfInstance(2, ((1,), (-1,), (1, 2)))
