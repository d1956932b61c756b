"""Path enumeration, swap-class counting, and explicit box membership."""

from __future__ import annotations

import itertools
import random

import pytest

from pvcap.errors import PathOverflowError
from pvcap.oracle import (
    check_membership_by_boxes,
    class_counts_to_target,
    consumption_at_point,
    count_path_components,
    enumerate_tame_paths,
)
from pvcap.pv_lang import Program
from pvcap.semantics import StateSpace, reachable_to_target

from conftest import random_corpus


def test_free_grid_path_count(free2):
    space = StateSpace(free2)
    paths = enumerate_tame_paths(space, (0, 0), (2, 2))
    assert len(paths) == 6  # C(4, 2) monotone step orders
    assert all(p.end == (2, 2) for p in paths)
    assert count_path_components(space, (0, 0), (2, 2)).class_count == 1


def test_paths_avoid_deadlock(dine2):
    space = StateSpace(dine2)
    paths = enumerate_tame_paths(space, (0, 0), (5, 5))
    assert paths
    for p in paths:
        assert (2, 2) not in p.vertices()


def test_fig2_first_steps(fig2):
    space = StateSpace(fig2)
    paths = enumerate_tame_paths(space, (2, 2, 2), (5, 5, 5))
    assert paths
    assert {p.steps[0] for p in paths} <= {0, 2}


def test_lexicographic_order(free2):
    space = StateSpace(free2)
    paths = [p.steps for p in enumerate_tame_paths(space, (0, 0), (2, 2))]
    assert paths == sorted(paths)


def test_overflow_is_signalled(free2):
    space = StateSpace(free2)
    with pytest.raises(PathOverflowError):
        enumerate_tame_paths(space, (0, 0), (2, 2), cap=3)


def test_class_counts(fig2, dine2):
    sf = StateSpace(fig2)
    assert count_path_components(sf, (2, 2, 2), (5, 5, 5)).class_count == 2
    sd = StateSpace(dine2)
    assert count_path_components(sd, (0, 0), (5, 5)).class_count == 2
    assert count_path_components(sd, (2, 2), (5, 5)).class_count == 0


def test_class_count_generated_program(ex39a):
    # too many paths to enumerate; the backward quotient sweep scales
    space = StateSpace(ex39a)
    counts = class_counts_to_target(space, space.top)
    assert counts[space.origin] == 1


def test_representatives(fig2):
    space = StateSpace(fig2)
    classes = count_path_components(space, (2, 2, 2), (5, 5, 5), representatives=True)
    assert len(classes.representatives) == classes.class_count == 2
    firsts = {p.steps[0] for p in classes.representatives}
    assert firsts == {0, 2}


def test_class_count_invariant_under_thread_relabeling(fig2):
    space = StateSpace(fig2)
    permuted = Program(fig2.resources, (fig2.threads[2], fig2.threads[0], fig2.threads[1]))
    pspace = StateSpace(permuted)
    assert (
        class_counts_to_target(space, space.top)[(0, 0, 0)]
        == class_counts_to_target(pspace, pspace.top)[(0, 0, 0)]
    )
    assert (
        count_path_components(space, (2, 2, 2), space.top).class_count
        == count_path_components(pspace, (2, 2, 2), pspace.top).class_count
        == 2
    )


def test_reachability_agreement(dine2):
    space = StateSpace(dine2)
    reach = reachable_to_target(space, (5, 5))
    for v in itertools.product(range(6), range(6)):
        if not space.vertex_allowed(v):
            continue
        paths = enumerate_tame_paths(space, v, (5, 5))
        assert bool(paths) == (v in reach)


def test_sweep_counter_matches_enumeration():
    rng = random.Random(99)
    for program in random_corpus(25, seed=99):
        space = StateSpace(program)
        counts = class_counts_to_target(space, space.top)
        vertices = [v for v in counts if space.vertex_allowed(v)]
        for v in rng.sample(vertices, min(6, len(vertices))):
            enumerated = count_path_components(space, v, space.top, cap=30000)
            assert counts[v] == enumerated.class_count, (program, v)


# -- explicit forbidden-box membership ----------------------------------------


def test_box_membership_fig2(fig2):
    assert check_membership_by_boxes(fig2, (1.5, 1.5, 0)) is False
    # three r1 intervals overlap: t1, t3 hold it, t2 sits strictly inside its own
    assert check_membership_by_boxes(fig2, (1.5, 2.5, 1.5)) is True
    assert check_membership_by_boxes(fig2, (0, 0, 0)) is False


def test_box_membership_matches_consumption(fig2, dine2, dine3):
    for program in (fig2, dine2, dine3):
        space = StateSpace(program)
        halves = [
            [k / 2 for k in range(2 * (space.top[j]) + 1)] for j in range(space.n)
        ]
        for point in itertools.product(*halves):
            by_boxes = check_membership_by_boxes(program, point)
            c = consumption_at_point(space, point)
            by_consumption = any(
                c[r] > space.capacities[r] for r in range(space.n_resources)
            )
            assert by_boxes == by_consumption, point
