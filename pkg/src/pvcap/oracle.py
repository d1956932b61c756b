"""Ground-truth engine: exhaustive directed-path enumeration and class counting.

Directed executions between vertices are represented by tame paths (monotone
unit-step lattice paths through allowed vertices and edges).  Two paths are
equivalent when one can be turned into the other by repeatedly swapping two
adjacent distinct steps across an allowed square; the number of equivalence
classes is the number of path components of the execution space between the
two vertices.  This swap granularity is the module's foundational assumption;
it is validated empirically against the spare-capacity predictions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import EnumerationSizeError, ForbiddenVertexError, PathOverflowError
from .pv_lang import Program
from .semantics import StateSpace, Vertex, build_consumption_profiles

DEFAULT_PATH_CAP = 10**6


@dataclass(frozen=True)
class TamePath:
    start: Vertex
    steps: tuple[int, ...]  # direction indices, each advancing one coordinate

    def vertices(self) -> list[Vertex]:
        out = [self.start]
        cur = list(self.start)
        for j in self.steps:
            cur[j] += 1
            out.append(tuple(cur))
        return out

    @property
    def end(self) -> Vertex:
        cur = list(self.start)
        for j in self.steps:
            cur[j] += 1
        return tuple(cur)


@dataclass(frozen=True)
class PathClassSet:
    class_count: int
    representatives: tuple[TamePath, ...] = ()


def enumerate_tame_paths(space: StateSpace, source: Vertex, target: Vertex,
                         cap: int = DEFAULT_PATH_CAP) -> list[TamePath]:
    """All monotone unit-step paths source -> target through allowed cells,
    in lexicographic step order.  Raises PathOverflowError past the cap; the
    caller must never treat a truncated enumeration as complete.
    """
    space.check_vertex(source)
    space.check_vertex(target)
    if any(s > t for s, t in zip(source, target)):
        raise ValueError(f"source {source} is not <= target {target}")
    if not space.vertex_allowed(source):
        raise ForbiddenVertexError(f"source {source} is forbidden")
    if not space.vertex_allowed(target):
        raise ForbiddenVertexError(f"target {target} is forbidden")

    # Restrict to vertices that still reach the target so dead branches are
    # pruned and the enumeration stays linear in its output size.
    reach = space.reachable_to_target(target)
    paths: list[TamePath] = []
    steps: list[int] = []

    def walk(v: Vertex) -> None:
        if v == target:
            if len(paths) >= cap:
                raise PathOverflowError(cap)
            paths.append(TamePath(source, tuple(steps)))
            return
        for j in range(space.n):
            if v[j] < target[j]:
                succ = v[:j] + (v[j] + 1,) + v[j + 1:]
                if succ in reach and space.edge_allowed(v, j):
                    steps.append(j)
                    walk(succ)
                    steps.pop()

    if source in reach:
        walk(source)
    return paths


def count_path_components(space: StateSpace, source: Vertex, target: Vertex,
                          cap: int = DEFAULT_PATH_CAP, representatives: bool = False) -> PathClassSet:
    """Number of swap-equivalence classes of tame paths source -> target.

    Builds the full path set, then closes under single swaps of adjacent
    distinct steps whose spanning square is allowed, using union-find.
    """
    paths = enumerate_tame_paths(space, source, target, cap=cap)
    if not paths:
        return PathClassSet(0)
    index = {p.steps: i for i, p in enumerate(paths)}
    parent = list(range(len(paths)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in paths:
        i = index[p.steps]
        base = list(source)
        for k in range(len(p.steps) - 1):
            a, b = p.steps[k], p.steps[k + 1]
            if a != b and space.cube_allowed(tuple(base), (a, b)):
                swapped = p.steps[:k] + (b, a) + p.steps[k + 2:]
                parent[find(i)] = find(index[swapped])
            base[p.steps[k]] += 1

    roots = {find(i) for i in range(len(paths))}
    reps = tuple(paths[i] for i in sorted(roots)) if representatives else ()
    return PathClassSet(len(roots), reps)


def class_counts_to_target(space: StateSpace, target: Vertex,
                           cap: int | None = None) -> dict[Vertex, int]:
    """Swap-equivalence class counts from every vertex below the target.

    Backward sweep: the classes at v are the classes reached through its
    allowed first steps, glued whenever two first steps span an allowed
    square and continue into the same class.  Agrees with the enumerative
    count on every pair but needs no path materialization, so it scales to
    spaces whose path counts overflow any cap.  `cap` bounds the classes per
    vertex; exceeding it raises PathOverflowError (class counts themselves
    can grow combinatorially).
    """
    space.check_vertex(target)
    if not space.vertex_allowed(target):
        raise ForbiddenVertexError(f"target {target} is forbidden")

    by_level: dict[int, list[Vertex]] = {}
    for v in itertools.product(*(range(x + 1) for x in target)):
        by_level.setdefault(sum(v), []).append(v)

    n = space.n
    class_count: dict[Vertex, int] = {target: 1}
    # edge_map[(v, j)][c] = class id at v of (step j, class c at v + e_j)
    edge_map: dict[tuple[Vertex, int], list[int]] = {}

    for level in sorted(by_level, reverse=True):
        for v in by_level[level]:
            if v == target:
                continue
            steps = []
            for j in range(n):
                if v[j] < target[j]:
                    succ = v[:j] + (v[j] + 1,) + v[j + 1:]
                    if class_count.get(succ, 0) and space.edge_allowed(v, j):
                        steps.append((j, succ))
            if not steps:
                class_count[v] = 0
                continue
            tokens = {}
            parent = []
            for j, succ in steps:
                for c in range(class_count[succ]):
                    tokens[(j, c)] = len(parent)
                    parent.append(len(parent))

            def find(x: int) -> int:
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for a in range(len(steps)):
                j, succ_j = steps[a]
                for b in range(a + 1, len(steps)):
                    k, succ_k = steps[b]
                    via = succ_j[:k] + (succ_j[k] + 1,) + succ_j[k + 1:]
                    if not class_count.get(via, 0):
                        continue
                    if not space.cube_allowed(v, (j, k)):
                        continue
                    through_j = edge_map[(succ_j, k)]
                    through_k = edge_map[(succ_k, j)]
                    for c in range(class_count[via]):
                        x = find(tokens[(j, through_j[c])])
                        y = find(tokens[(k, through_k[c])])
                        parent[x] = y
            ids: dict[int, int] = {}
            for j, succ in steps:
                mapping = []
                for c in range(class_count[succ]):
                    root = find(tokens[(j, c)])
                    if root not in ids:
                        ids[root] = len(ids)
                    mapping.append(ids[root])
                edge_map[(v, j)] = mapping
            class_count[v] = len(ids)
            if cap is not None and len(ids) > cap:
                raise PathOverflowError(cap)
    return class_count


# ---------------------------------------------------------------------------
# Explicit forbidden-box membership (cross-check for the consumption test)
# ---------------------------------------------------------------------------


def _enumerate_forbidden_boxes(space: StateSpace):
    """All open boxes where some resource exceeds its capacity.

    For resource r with capacity k, one box per choice of k+1 calling threads
    and one lock/release interval in each: the product of those open
    intervals, full range elsewhere.
    """
    profiles = space.profiles
    boxes = []
    for r in range(space.n_resources):
        cap = space.capacities[r]
        callers = [j for j, tp in enumerate(profiles.threads) if tp.locks_by_resource[r]]
        if len(callers) <= cap:
            continue
        for chosen in itertools.combinations(callers, cap + 1):
            interval_choices = []
            for j in chosen:
                tp = profiles.threads[j]
                interval_choices.append(
                    list(zip(tp.locks_by_resource[r], tp.releases_by_resource[r]))
                )
            for combo in itertools.product(*interval_choices):
                boxes.append((chosen, combo))
    return boxes


def count_forbidden_boxes(space: StateSpace) -> int:
    return len(_enumerate_forbidden_boxes(space))


def check_membership_by_boxes(program: Program, point, max_boxes: int = 10**5) -> bool:
    """Whether a (half-integer) point lies in the explicitly enumerated
    forbidden region.  Small programs only; agrees with the consumption test.
    """
    profiles = build_consumption_profiles(program)
    space = StateSpace(program, profiles)
    pt = tuple(Fraction(x) for x in point)
    if len(pt) != space.n:
        raise ValueError("point dimension mismatch")
    for x, t in zip(pt, space.top):
        if not 0 <= x <= t:
            raise ValueError(f"point {point} outside lattice")
    if space.n > 3:
        boxes = _enumerate_forbidden_boxes(space)
        if len(boxes) > max_boxes:
            raise EnumerationSizeError(f"{len(boxes)} boxes exceed the guard of {max_boxes}")
    else:
        boxes = _enumerate_forbidden_boxes(space)
    for chosen, combo in boxes:
        if all(lock < pt[j] < release for j, (lock, release) in zip(chosen, combo)):
            return True
    return False


def consumption_at_point(space: StateSpace, point) -> tuple[int, ...]:
    """Total consumption at an arbitrary (possibly fractional) lattice point."""
    pt = tuple(Fraction(x) for x in point)
    total = [0] * space.n_resources
    for j, tp in enumerate(space.profiles.threads):
        x = pt[j]
        for r in range(space.n_resources):
            for lock, release in zip(tp.locks_by_resource[r], tp.releases_by_resource[r]):
                if lock < x < release:
                    total[r] += 1
    return tuple(total)
