"""Shared corpus: named programs and a seeded random program generator."""

from __future__ import annotations

import random

import pytest

from pvcap.pv_lang import (
    Action,
    LOCK,
    Program,
    RELEASE,
    ResourceDecl,
    Thread,
    generate_threshold_program,
    parse_program,
)

FIG2_TEXT = """\
resource r1 capacity 2
resource r2 capacity 2
thread t1: P(r1) P(r2) V(r2) V(r1)
thread t2: P(r2) P(r1) V(r1) V(r2)
thread t3: P(r1) P(r2) V(r2) V(r1)
"""

DINE2_TEXT = """\
resource a capacity 1
resource b capacity 1
thread t1: P(a) P(b) V(b) V(a)
thread t2: P(b) P(a) V(a) V(b)
"""

DINE3_TEXT = """\
resource r1 capacity 1
resource r2 capacity 1
resource r3 capacity 1
thread t1: P(r1) P(r2) V(r2) V(r1)
thread t2: P(r2) P(r3) V(r3) V(r2)
thread t3: P(r3) P(r1) V(r1) V(r3)
"""

EX39B_TEXT = """\
resource r1 capacity 3
resource r2 capacity 3
thread p1: P(r1) P(r2) V(r2) V(r1)
thread p2: P(r1) P(r2) V(r2) V(r1)
thread p3: P(r2) P(r1) V(r1) V(r2)
thread p4: P(r2) P(r1) V(r1) V(r2)
"""

FREE2_TEXT = """\
resource r capacity 2
thread t1: P(r) V(r)
thread t2: P(r) V(r)
"""


@pytest.fixture(scope="session")
def fig2() -> Program:
    return parse_program(FIG2_TEXT)


@pytest.fixture(scope="session")
def dine2() -> Program:
    return parse_program(DINE2_TEXT)


@pytest.fixture(scope="session")
def dine3() -> Program:
    return parse_program(DINE3_TEXT)


@pytest.fixture(scope="session")
def ex39a() -> Program:
    return generate_threshold_program(4, (3, 3))


@pytest.fixture(scope="session")
def ex39b() -> Program:
    return parse_program(EX39B_TEXT)


def _with_extra_thread(program: Program, name: str, order) -> Program:
    actions = tuple(Action(LOCK, r) for r in order) + tuple(
        Action(RELEASE, r) for r in reversed(order)
    )
    return Program(program.resources, (Thread(name, actions),) + program.threads)


@pytest.fixture(scope="session")
def ex39a_p0(ex39a) -> Program:
    return _with_extra_thread(ex39a, "p0", ("r1", "r2"))


@pytest.fixture(scope="session")
def ex39b_p0(ex39b) -> Program:
    return _with_extra_thread(ex39b, "p0", ("r1", "r2"))


@pytest.fixture(scope="session")
def fig4() -> Program:
    # Three threads competing for a single use of one resource of capacity 2.
    return generate_threshold_program(3, (2,))


@pytest.fixture(scope="session")
def free2() -> Program:
    return parse_program(FREE2_TEXT)


def single_resource_programs(max_threads: int = 4, max_pairs: int = 3):
    """All programs with one resource and every thread of shape (P V)^k."""
    programs = []
    for n in range(1, max_threads + 1):
        for cap in range(1, n + 1):
            for pairs in range(1, max_pairs + 1):
                body = tuple(
                    Action(LOCK if i % 2 == 0 else RELEASE, "r") for i in range(2 * pairs)
                )
                programs.append(
                    Program(
                        (ResourceDecl("r", cap),),
                        tuple(Thread(f"t{j + 1}", body) for j in range(n)),
                    )
                )
    return programs


def random_program(rng: random.Random, n_threads: int, n_resources: int,
                   max_pairs: int = 3, capacities=None) -> Program:
    """A valid random program: per thread, a random interleaving of balanced
    lock/release pairs (locks of distinct resources may overlap arbitrarily)."""
    resources = tuple(
        ResourceDecl(
            f"r{i + 1}",
            capacities[i] if capacities else rng.randint(1, max(1, n_threads - 0)),
        )
        for i in range(n_resources)
    )
    names = [r.name for r in resources]
    threads = []
    for j in range(n_threads):
        pairs = rng.randint(1, max_pairs)
        remaining = 2 * pairs
        actions: list[Action] = []
        open_locks: list[str] = []
        while remaining:
            available = [r for r in names if r not in open_locks]
            can_open = available and remaining >= len(open_locks) + 2
            if can_open and (not open_locks or rng.random() < 0.55):
                r = rng.choice(available)
                actions.append(Action(LOCK, r))
                open_locks.append(r)
            else:
                r = open_locks.pop(rng.randrange(len(open_locks)))
                actions.append(Action(RELEASE, r))
            remaining -= 1
        threads.append(Thread(f"t{j + 1}", tuple(actions)))
    return Program(resources, tuple(threads))


def random_corpus(count: int, seed: int, max_threads: int = 3, max_pairs: int = 3):
    """Deterministic list of random programs, biased toward small grids."""
    rng = random.Random(seed)
    programs = []
    for _ in range(count):
        n = rng.randint(2, max_threads)
        nres = rng.randint(1, 3)
        pairs = max_pairs if n <= 2 else min(max_pairs, 2)
        programs.append(random_program(rng, n, nres, max_pairs=pairs))
    return programs


@pytest.fixture(scope="session")
def corpus_spaces():
    """Shared state spaces for corpus-wide invariant checks; session scope so
    membership caches survive across tests."""
    from pvcap.semantics import StateSpace

    programs = random_corpus(60, seed=101) + single_resource_programs()
    return [StateSpace(p) for p in programs]


@pytest.fixture(scope="session")
def corpus_link_complexes(corpus_spaces):
    """(space, {vertex: future link complex}) for every allowed non-final
    vertex, computed once for all invariant tests."""
    import itertools

    from pvcap.links import future_link_complex

    out = []
    for space in corpus_spaces:
        links = {}
        for v in itertools.product(*map(range, space.shape)):
            if v != space.top and space.vertex_allowed(v):
                links[v] = future_link_complex(space, v)
        out.append((space, links))
    return out
