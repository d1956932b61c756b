"""Lattice semantics of PV programs.

Tabulates per-thread consumption functions, decides membership of vertices,
edges and cubes in the state space (capacity test plus excluded boxes), and
provides lattice navigation: lock-predecessor / release-successor corners and
backward reachability to a target vertex.

Coordinates: thread j ranges over 0..length+1 where positions 1..length carry
the actions, 0 is the start and length+1 the final coordinate.  A vertex is a
plain tuple of ints.  A thread is "at" a position before executing the action
there; it holds a resource exactly strictly between a lock and its matching
release.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ForbiddenVertexError, OutOfBoundsError, NoSuccessorError
from .pv_lang import Program

Vertex = tuple[int, ...]


# ---------------------------------------------------------------------------
# Consumption profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThreadProfile:
    """Per-position tables for one thread over positions 0..length+1.

    consumption[k][r] is 1 iff the thread holds resource r at coordinate k;
    calls[k][r] is +1 at a lock of r, -1 at a release, 0 otherwise.
    """

    length: int
    consumption: tuple[tuple[int, ...], ...]
    calls: tuple[tuple[int, ...], ...]
    lock_resource: tuple[int, ...]      # resource index locked at position k, else -1
    release_resource: tuple[int, ...]   # resource index released at position k, else -1
    locks_by_resource: tuple[tuple[int, ...], ...]
    releases_by_resource: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class ConsumptionProfile:
    resources: tuple[str, ...]
    capacities: tuple[int, ...]
    threads: tuple[ThreadProfile, ...]

    def resource_index(self, name: str) -> int:
        return self.resources.index(name)

    def cr(self, thread: int, resource: str) -> tuple[int, ...]:
        r = self.resource_index(resource)
        return tuple(row[r] for row in self.threads[thread].consumption)

    def dr(self, thread: int, resource: str) -> tuple[int, ...]:
        r = self.resource_index(resource)
        return tuple(row[r] for row in self.threads[thread].calls)


def build_consumption_profiles(program: Program) -> ConsumptionProfile:
    """Tabulate holding and call functions for every thread and resource.

    A resource is held at the integer coordinates strictly between its lock
    and the matching release; in particular it is no longer counted at the
    release coordinate itself, and the final coordinate holds nothing.
    """
    names = program.resource_names
    index = {name: r for r, name in enumerate(names)}
    nres = len(names)
    profiles = []
    for thread in program.threads:
        length = thread.length
        consumption = [[0] * nres for _ in range(length + 2)]
        calls = [[0] * nres for _ in range(length + 2)]
        lock_res = [-1] * (length + 2)
        release_res = [-1] * (length + 2)
        locks: list[list[int]] = [[] for _ in range(nres)]
        releases: list[list[int]] = [[] for _ in range(nres)]
        open_lock: dict[int, int] = {}
        for pos in range(1, length + 1):
            act = thread.action_at(pos)
            r = index[act.resource]
            if act.is_lock:
                calls[pos][r] = 1
                lock_res[pos] = r
                locks[r].append(pos)
                open_lock[r] = pos
            else:
                calls[pos][r] = -1
                release_res[pos] = r
                releases[r].append(pos)
                start = open_lock.pop(r)
                for k in range(start + 1, pos):
                    consumption[k][r] = 1
        assert not open_lock, "validated programs release every lock"
        profiles.append(
            ThreadProfile(
                length=length,
                consumption=tuple(tuple(row) for row in consumption),
                calls=tuple(tuple(row) for row in calls),
                lock_resource=tuple(lock_res),
                release_resource=tuple(release_res),
                locks_by_resource=tuple(tuple(p) for p in locks),
                releases_by_resource=tuple(tuple(p) for p in releases),
            )
        )
    return ConsumptionProfile(
        resources=names,
        capacities=tuple(r.capacity for r in program.resources),
        threads=tuple(profiles),
    )


# ---------------------------------------------------------------------------
# Excluded boxes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Half-open hyperrectangle ]low, high].

    On coordinates with low[j] < high[j] it contains low[j] < y <= high[j];
    on coordinates with low[j] == high[j] it is the thin face y == low[j].
    """

    low: Vertex
    high: Vertex

    def __post_init__(self):
        assert len(self.low) == len(self.high)
        assert all(l <= h for l, h in zip(self.low, self.high))

    def contains_vertex(self, v: Vertex) -> bool:
        return all(
            (l < x <= h) if l < h else x == l
            for x, l, h in zip(v, self.low, self.high)
        )

    def contains_face(self, base: Vertex, fractional: frozenset[int]) -> bool:
        """Whether the open face {base + t*e_B : 0 < t_j < 1, j in B} lies inside.

        Box borders sit at integers, so the face is inside iff every generic
        point is; the test reduces to per-coordinate interval checks.
        """
        for j, (x, l, h) in enumerate(zip(base, self.low, self.high)):
            if j in fractional:
                if l == h or not l <= x < h:
                    return False
            else:
                if (l < h and not l < x <= h) or (l == h and x != l):
                    return False
        return True

    def meets_cube(self, base: Vertex, extents) -> bool:
        """Whether the closed cube [base, base + extents] intersects the box."""
        for x, s, l, h in zip(base, extents, self.low, self.high):
            if l < h:
                if not (x + s > l and x <= h):
                    return False
            else:
                if not x <= l <= x + s:
                    return False
        return True

    def __str__(self) -> str:
        return "](%s),(%s)]" % (",".join(map(str, self.low)), ",".join(map(str, self.high)))


class ExitBox(Box):
    """Box with escape slabs kept allowed, used when walling off a critical region.

    A face inside ]low, high] is exempt when all its points sit past the
    region's top vertex in exactly one exit direction and at-or-below it in
    every other coordinate.
    """

    def __init__(self, low: Vertex, high: Vertex, top: Vertex, exits: tuple[int, ...]):
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        object.__setattr__(self, "top", top)
        object.__setattr__(self, "exits", tuple(exits))
        self.__post_init__()

    def _exempt(self, base: Vertex, fractional: frozenset[int]) -> bool:
        for i in self.exits:
            past = base[i] >= self.top[i] if i in fractional else base[i] > self.top[i]
            if not past:
                continue
            ok = True
            for j in range(len(base)):
                if j == i:
                    continue
                below = base[j] + 1 <= self.top[j] if j in fractional else base[j] <= self.top[j]
                if not below:
                    ok = False
                    break
            if ok:
                return True
        return False

    def contains_vertex(self, v: Vertex) -> bool:
        return super().contains_vertex(v) and not self._exempt(v, frozenset())

    def contains_face(self, base: Vertex, fractional: frozenset[int]) -> bool:
        return super().contains_face(base, fractional) and not self._exempt(base, fractional)


# ---------------------------------------------------------------------------
# Vertex classification
# ---------------------------------------------------------------------------


P_VERTEX = "P"
FINAL_VERTEX = "final"
OTHER_VERTEX = "other"


@dataclass(frozen=True)
class VertexClass:
    kind: str
    coordinate: int | None = None  # witnessing thread for OTHER_VERTEX
    reason: str | None = None      # "start" or "release"

    @property
    def is_p(self) -> bool:
        return self.kind == P_VERTEX

    @property
    def is_final(self) -> bool:
        return self.kind == FINAL_VERTEX


@dataclass(frozen=True)
class VertexCalls:
    """Lock requests issued at a vertex: counts, calling resources, callers."""

    d: tuple[int, ...]                       # per resource, number of threads calling it
    resources: tuple[str, ...]               # resources with at least one call
    callers: dict[str, tuple[int, ...]]      # resource -> calling thread indices


# ---------------------------------------------------------------------------
# State space
# ---------------------------------------------------------------------------


class StateSpace:
    """Immutable membership/navigation service for one program.

    Membership is decided by the capacity inequality on consumption, never by
    materializing the forbidden-region boxes; extra half-open boxes (grown by
    doomed-region elimination) additionally exclude points.  Queries are pure;
    the instance memoizes consumption and cube results internally.
    """

    def __init__(self, program: Program, profiles: ConsumptionProfile | None = None,
                 extra_boxes: tuple[Box, ...] = (), capacities: tuple[int, ...] | None = None):
        self.program = program
        self.profiles = profiles if profiles is not None else build_consumption_profiles(program)
        self.extra_boxes = tuple(extra_boxes)
        self.capacities = tuple(capacities) if capacities is not None else self.profiles.capacities
        self.n = len(self.profiles.threads)
        self.n_resources = len(self.profiles.resources)
        self.shape = tuple(tp.length + 2 for tp in self.profiles.threads)
        self.top: Vertex = tuple(s - 1 for s in self.shape)
        self.origin: Vertex = (0,) * self.n
        self._consumption_cache: dict[Vertex, tuple[int, ...]] = {}
        self._cube_cache: dict[tuple[Vertex, tuple[int, ...]], bool] = {}

    def with_boxes(self, boxes) -> "StateSpace":
        return StateSpace(self.program, self.profiles, tuple(boxes), self.capacities)

    def truncated(self, t: Vertex) -> "StateSpace":
        """The sublattice [0, t] as a state space of its own.

        Coordinate t_j becomes thread j's final coordinate: the action pending
        there never executes, so it issues no call, and directions pinned at
        t_j are inactive.  Consumption tables are unchanged (a lock without a
        release below t_j stays held at the truncated final).  Excluded boxes
        carry over; their parts above t are simply outside the sublattice.
        """
        self.check_vertex(t)
        if t == self.top:
            return self
        threads = []
        for j, tp in enumerate(self.profiles.threads):
            cut = t[j]
            calls = tuple(tp.calls[:cut]) + ((0,) * self.n_resources,)
            threads.append(
                ThreadProfile(
                    length=cut - 1,
                    consumption=tuple(tp.consumption[: cut + 1]),
                    calls=calls,
                    lock_resource=tuple(tp.lock_resource[:cut]) + (-1,),
                    release_resource=tuple(tp.release_resource[:cut]) + (-1,),
                    locks_by_resource=tuple(
                        tuple(p for p in locks if p < cut) for locks in tp.locks_by_resource
                    ),
                    releases_by_resource=tuple(
                        tuple(p for p in rels if p < cut) for rels in tp.releases_by_resource
                    ),
                )
            )
        profiles = ConsumptionProfile(self.profiles.resources, self.profiles.capacities, tuple(threads))
        return StateSpace(self.program, profiles, self.extra_boxes, self.capacities)

    # -- basic lattice helpers ------------------------------------------------

    def in_lattice(self, v: Vertex) -> bool:
        return len(v) == self.n and all(0 <= x <= t for x, t in zip(v, self.top))

    def check_vertex(self, v: Vertex) -> None:
        if not self.in_lattice(v):
            raise OutOfBoundsError(f"vertex {v} outside lattice with top {self.top}")

    def active_directions(self, v: Vertex) -> tuple[int, ...]:
        return tuple(j for j in range(self.n) if v[j] < self.top[j])

    # -- consumption and calls ------------------------------------------------

    def consumption(self, v: Vertex) -> tuple[int, ...]:
        """Total consumption vector: how many threads hold each resource at v."""
        cached = self._consumption_cache.get(v)
        if cached is not None:
            return cached
        self.check_vertex(v)
        rows = [tp.consumption[x] for tp, x in zip(self.profiles.threads, v)]
        result = tuple(map(sum, zip(*rows)))
        self._consumption_cache[v] = result
        return result

    def calls(self, v: Vertex) -> VertexCalls:
        """Pending lock requests at v."""
        self.check_vertex(v)
        d = [0] * self.n_resources
        callers: dict[str, list[int]] = {}
        for j, tp in enumerate(self.profiles.threads):
            r = tp.lock_resource[v[j]]
            if r >= 0:
                d[r] += 1
                callers.setdefault(self.profiles.resources[r], []).append(j)
        resources = tuple(name for name in self.profiles.resources if name in callers)
        return VertexCalls(tuple(d), resources, {k: tuple(v) for k, v in callers.items()})

    def classify(self, v: Vertex) -> VertexClass:
        """Final / lock-pattern / other, with a witnessing coordinate for other."""
        self.check_vertex(v)
        if v == self.top:
            return VertexClass(FINAL_VERTEX)
        for j, tp in enumerate(self.profiles.threads):
            x = v[j]
            if x == tp.length + 1 or tp.lock_resource[x] >= 0:
                continue
            reason = "start" if x == 0 else "release"
            return VertexClass(OTHER_VERTEX, coordinate=j, reason=reason)
        return VertexClass(P_VERTEX)

    # -- membership -----------------------------------------------------------

    def cube_allowed(self, v: Vertex, directions) -> bool:
        """Whether the closed cube [v, v + e_S] lies in the state space.

        Every sub-face (integer corner offset A, fractional direction set B)
        is tested: its generic points must satisfy the capacity inequality
        and avoid every excluded box.  Release steps never add consumption,
        so only pending locks in fractional directions count.
        """
        dirs = tuple(sorted(set(directions)))
        cached = self._cube_cache.get((v, dirs))
        if cached is not None:
            return cached
        self.check_vertex(v)
        topv = list(v)
        for j in dirs:
            topv[j] += 1
        if not self.in_lattice(tuple(topv)):
            raise OutOfBoundsError(f"cube [{v}, {tuple(topv)}] outside lattice")
        return self._cube_allowed_rec(v, dirs)

    def _cube_allowed_rec(self, v: Vertex, dirs: tuple[int, ...]) -> bool:
        # Proper sub-faces all lie in some facet, so after the (memoized)
        # facets only the 2^|dirs| faces spanning every direction remain.
        key = (v, dirs)
        cached = self._cube_cache.get(key)
        if cached is not None:
            return cached
        result = True
        for i in range(len(dirs)):
            if not self._cube_allowed_rec(v, dirs[:i] + dirs[i + 1:]):
                result = False
                break
        if result:
            caps = self.capacities
            threads = self.profiles.threads
            for bits in range(1 << len(dirs)):
                base = list(v)
                fractional = []
                for idx, j in enumerate(dirs):
                    if bits & (1 << idx):
                        base[j] += 1
                    else:
                        fractional.append(j)
                base_t = tuple(base)
                c = self.consumption(base_t)
                if fractional:
                    extra = [0] * self.n_resources
                    for j in fractional:
                        r = threads[j].lock_resource[base_t[j]]
                        if r >= 0:
                            extra[r] += 1
                    bad = any(c[r] + extra[r] > caps[r] for r in range(self.n_resources))
                else:
                    bad = any(c[r] > caps[r] for r in range(self.n_resources))
                if not bad and self.extra_boxes:
                    frac = frozenset(fractional)
                    bad = any(box.contains_face(base_t, frac) for box in self.extra_boxes)
                if bad:
                    result = False
                    break
        self._cube_cache[key] = result
        return result

    def vertex_allowed(self, v: Vertex) -> bool:
        return self.cube_allowed(v, ())

    def edge_allowed(self, v: Vertex, direction: int) -> bool:
        return self.cube_allowed(v, (direction,))

    # -- lock/release navigation ----------------------------------------------

    def _resource_indices(self, resources) -> list[int]:
        return [self.profiles.resource_index(r) if isinstance(r, str) else r for r in resources]

    def predecessor(self, v: Vertex, resources) -> Vertex:
        """Componentwise largest lock position of the given resources below v
        (0 when there is none)."""
        self.check_vertex(v)
        rs = self._resource_indices(resources)
        out = []
        for j, tp in enumerate(self.profiles.threads):
            best = 0
            for r in rs:
                for p in tp.locks_by_resource[r]:
                    if p < v[j] and p > best:
                        best = p
            out.append(best)
        return tuple(out)

    def successor(self, v: Vertex, resources) -> Vertex:
        """Componentwise smallest release position of the given resources above v."""
        self.check_vertex(v)
        rs = self._resource_indices(resources)
        out = []
        for j, tp in enumerate(self.profiles.threads):
            best = None
            for r in rs:
                for p in tp.releases_by_resource[r]:
                    if p > v[j] and (best is None or p < best):
                        best = p
            if best is None:
                name = self.program.threads[j].name
                raise NoSuccessorError(
                    f"thread {name} has no release of {sorted(resources)} above position {v[j]}"
                )
            out.append(best)
        return tuple(out)

    # -- reachability ---------------------------------------------------------

    def reachable_to_target(self, t: Vertex) -> set[Vertex]:
        """All vertices from which t is reachable along allowed unit-step edges.

        Backward sweep in decreasing coordinate-sum order over the sublattice
        v <= t; includes t itself.
        """
        self.check_vertex(t)
        if not self.vertex_allowed(t):
            raise ForbiddenVertexError(f"target {t} is forbidden")
        by_level: dict[int, list[Vertex]] = {}
        for v in itertools.product(*(range(x + 1) for x in t)):
            by_level.setdefault(sum(v), []).append(v)
        reach: set[Vertex] = {t}
        for level in sorted(by_level, reverse=True):
            for v in by_level[level]:
                if v == t:
                    continue
                for j in range(self.n):
                    if v[j] < t[j]:
                        succ = v[:j] + (v[j] + 1,) + v[j + 1:]
                        if succ in reach and self.edge_allowed(v, j):
                            reach.add(v)
                            break
        return reach


# ---------------------------------------------------------------------------
# Module-level operation aliases
# ---------------------------------------------------------------------------


def vertex_consumption(space: StateSpace, v: Vertex) -> tuple[int, ...]:
    return space.consumption(v)


def vertex_calls(space: StateSpace, v: Vertex) -> VertexCalls:
    return space.calls(v)


def classify_vertex(space: StateSpace, v: Vertex) -> VertexClass:
    return space.classify(v)


def cube_allowed(space: StateSpace, v: Vertex, directions) -> bool:
    return space.cube_allowed(v, directions)


def predecessor_vertex(space: StateSpace, v: Vertex, resources) -> Vertex:
    return space.predecessor(v, resources)


def successor_vertex(space: StateSpace, v: Vertex, resources) -> Vertex:
    return space.successor(v, resources)


def reachable_to_target(space: StateSpace, t: Vertex) -> set[Vertex]:
    return space.reachable_to_target(t)
