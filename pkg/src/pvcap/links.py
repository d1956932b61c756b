"""Future links of vertices and their connectivity.

For a vertex whose coordinates are all lock positions or final, the future
link is (up to homeomorphism) a join of simplex skeleta, one factor per
resource called there: the factor for resource r has one point per calling
thread and skeleton dimension (capacity - held - 1).  For arbitrary vertices,
or when excluded boxes interfere, the link is built as a generic simplicial
complex from the allowed future cubes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import BoxInterferenceError, ForbiddenVertexError, VertexClassError
from .semantics import StateSpace, Vertex


@dataclass(frozen=True)
class JoinFactor:
    resource: str
    points: int         # number of calling threads
    skeleton_dim: int   # capacity - held - 1; -1 means the factor is empty

    @property
    def is_empty(self) -> bool:
        return self.skeleton_dim < 0


@dataclass(frozen=True)
class JoinOfSkeleta:
    """Join decomposition of a future link; empty factors are retained so
    reports can show which resource exhausted its capacity."""

    factors: tuple[JoinFactor, ...]

    def factor(self, resource: str) -> JoinFactor:
        for f in self.factors:
            if f.resource == resource:
                return f
        raise KeyError(resource)


@dataclass(frozen=True)
class LinkComplex:
    """Downward-closed family of non-empty direction sets that span allowed
    future cubes at a vertex."""

    ground: frozenset[int]
    simplices: frozenset[frozenset[int]]

    @property
    def is_empty(self) -> bool:
        return not self.simplices

    @property
    def dimension(self) -> int:
        return max((len(s) for s in self.simplices), default=0) - 1

    def vertices(self) -> set[int]:
        return {next(iter(s)) for s in self.simplices if len(s) == 1}

    def edges(self) -> set[frozenset[int]]:
        return {s for s in self.simplices if len(s) == 2}


@dataclass(frozen=True)
class ConnectivityClass:
    """Empty / contractible / exactly k-connected (and not (k+1)-connected).

    Exactly(-1) means non-empty but disconnected.
    """

    kind: str  # "empty" | "contractible" | "exactly"
    k: int | None = None

    @staticmethod
    def empty() -> "ConnectivityClass":
        return ConnectivityClass("empty")

    @staticmethod
    def contractible() -> "ConnectivityClass":
        return ConnectivityClass("contractible")

    @staticmethod
    def exactly(k: int) -> "ConnectivityClass":
        return ConnectivityClass("exactly", k)

    def describe(self) -> str:
        if self.kind == "empty":
            return "empty"
        if self.kind == "contractible":
            return "contractible"
        if self.k == -1:
            return "(-1)-connected (non-empty, possibly disconnected)"
        if self.k == 0:
            return "0-connected (path-connected)"
        return f"{self.k}-connected"


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def max_cube_box_free(space: StateSpace, v: Vertex) -> bool:
    """True when no excluded box meets the maximal future cube of v."""
    extents = tuple(1 if v[j] < space.top[j] else 0 for j in range(space.n))
    return not any(box.meets_cube(v, extents) for box in space.extra_boxes)


def future_link_descriptor(space: StateSpace, v: Vertex) -> JoinOfSkeleta:
    """Closed-form link of a lock-pattern vertex: one factor per called resource."""
    if not space.vertex_allowed(v):
        raise ForbiddenVertexError(f"vertex {v} is forbidden")
    cls = space.classify(v)
    if not cls.is_p:
        raise VertexClassError(f"vertex {v} is {cls.kind}, not a lock-pattern vertex")
    if not max_cube_box_free(space, v):
        raise BoxInterferenceError(
            f"an excluded box meets the future cube of {v}; use future_link_complex"
        )
    c = space.consumption(v)
    calls = space.calls(v)
    factors = []
    for name in calls.resources:
        r = space.profiles.resource_index(name)
        factors.append(JoinFactor(name, points=calls.d[r], skeleton_dim=space.capacities[r] - c[r] - 1))
    return JoinOfSkeleta(tuple(factors))


def descriptor_connectivity(descriptor: JoinOfSkeleta, kappa_v) -> ConnectivityClass:
    """Connectivity of the link from the spare capacity computed at the same vertex."""
    if kappa_v == math.inf:
        return ConnectivityClass.contractible()
    if kappa_v == 0:
        return ConnectivityClass.empty()
    return ConnectivityClass.exactly(int(kappa_v) - 2)


def future_link_complex(space: StateSpace, v: Vertex) -> LinkComplex:
    """Generic link: all non-empty direction sets whose future cube is allowed.

    Works with excluded boxes present; on box-free lock-pattern vertices it
    realizes the descriptor.
    """
    if not space.vertex_allowed(v):
        raise ForbiddenVertexError(f"vertex {v} is forbidden")
    if v == space.top:
        raise VertexClassError("the final vertex has no future link")
    ground = space.active_directions(v)
    simplices = set()
    for size in range(1, len(ground) + 1):
        found = False
        for subset in itertools.combinations(ground, size):
            if size > 1 and any(
                frozenset(subset) - {j} not in simplices for j in subset
            ):
                continue  # a face is already excluded
            if space.cube_allowed(v, subset):
                simplices.add(frozenset(subset))
                found = True
        if not found:
            break
    return LinkComplex(frozenset(ground), frozenset(simplices))


def complex_components(complex_: LinkComplex) -> int:
    """Number of connected components of the 1-skeleton (0 iff empty)."""
    verts = complex_.vertices()
    if not verts:
        return 0
    parent = {x: x for x in verts}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for edge in complex_.edges():
        a, b = tuple(edge)
        parent[find(a)] = find(b)
    return len({find(x) for x in verts})


def components_as_direction_sets(complex_: LinkComplex) -> tuple[tuple[int, ...], ...]:
    """Connected components of the link as sorted tuples of directions."""
    verts = complex_.vertices()
    if not verts:
        return ()
    parent = {x: x for x in verts}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for edge in complex_.edges():
        a, b = tuple(edge)
        parent[find(a)] = find(b)
    groups: dict[int, list[int]] = {}
    for x in verts:
        groups.setdefault(find(x), []).append(x)
    return tuple(sorted(tuple(sorted(g)) for g in groups.values()))


def predicted_components(descriptor: JoinOfSkeleta) -> int:
    """Component count implied by a join of skeleta.

    A join of two or more non-empty spaces is connected; a single non-empty
    factor is the skeleton of a simplex, disconnected only in dimension 0.
    """
    nonempty = [f for f in descriptor.factors if not f.is_empty]
    if not nonempty:
        return 0
    if len(nonempty) == 1:
        f = nonempty[0]
        return f.points if f.skeleton_dim == 0 else 1
    return 1
