"""Spare-capacity analysis of PV state spaces.

Computes per-vertex and global spare capacities, detects deadlocks and walls
off their doomed regions (recursively, until a fixpoint), finds critical
vertices and their regions, bounds the number of execution classes by chains
of critical-link components, and compares spare capacities before and after a
thread crash.

The per-vertex sweep is expressed as whole-array operations over the product
lattice; navigation and link construction near excluded boxes fall back to
exact scalar code.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BoxInterferenceError,
    CrashScenarioError,
    ForbiddenVertexError,
    NotADeadlockError,
    NotCriticalError,
    PvcapError,
    VertexClassError,
)
from .links import (
    ConnectivityClass,
    complex_components,
    components_as_direction_sets,
    future_link_complex,
    max_cube_box_free,
)
from .pv_lang import Program
from .semantics import Box, ExitBox, StateSpace, Vertex

INFINITE = math.inf


# ---------------------------------------------------------------------------
# Per-vertex spare capacity (closed form)
# ---------------------------------------------------------------------------


def spare_capacity_at(space: StateSpace, v: Vertex):
    """Spare capacity at an allowed lock-pattern vertex.

    Infinite when some called resource has positive slack covering all its
    callers; otherwise the sum of slacks over the called resources.
    """
    if not space.vertex_allowed(v):
        raise ForbiddenVertexError(f"vertex {v} is forbidden")
    cls = space.classify(v)
    if not cls.is_p:
        raise VertexClassError(f"vertex {v} is {cls.kind}, not a lock-pattern vertex")
    if not max_cube_box_free(space, v):
        raise BoxInterferenceError(f"an excluded box meets the future cube of {v}")
    c = space.consumption(v)
    calls = space.calls(v)
    infinite = False
    total = 0
    for name in calls.resources:
        r = space.profiles.resource_index(name)
        slack = space.capacities[r] - c[r]
        if slack > 0 and calls.d[r] <= slack:
            infinite = True
        total += slack
    return INFINITE if infinite else total


# ---------------------------------------------------------------------------
# Array engine over the product lattice
# ---------------------------------------------------------------------------


def _axis_view(vec: np.ndarray, axis: int, n: int) -> np.ndarray:
    shape = [1] * n
    shape[axis] = len(vec)
    return vec.reshape(shape)


def _shift_down(mask: np.ndarray, axis: int) -> np.ndarray:
    """out[v] = mask[v + e_axis], False past the upper boundary."""
    out = np.zeros_like(mask)
    src = [slice(None)] * mask.ndim
    dst = [slice(None)] * mask.ndim
    src[axis] = slice(1, None)
    dst[axis] = slice(0, -1)
    out[tuple(dst)] = mask[tuple(src)]
    return out


class _GridEngine:
    """Whole-array tables for one state space: consumption, calls, membership,
    per-direction edge admissibility, formula spare values, reachability.

    Supports plain excluded boxes only; spaces with exit-walled boxes use the
    scalar paths instead.
    """

    def __init__(self, space: StateSpace):
        if any(type(b) is not Box for b in space.extra_boxes):
            raise TypeError("array engine supports plain boxes only")
        self.space = space
        n = space.n
        nres = space.n_resources
        shape = space.shape
        self.caps = np.array(space.capacities, dtype=np.int32)

        c = np.zeros(shape + (nres,), dtype=np.int16)
        d = np.zeros(shape + (nres,), dtype=np.int16)
        self._lock_rows = []
        for j, tp in enumerate(space.profiles.threads):
            cj = np.array(tp.consumption, dtype=np.int16)
            lockv = np.zeros((shape[j], nres), dtype=np.int16)
            for k in range(shape[j]):
                r = tp.lock_resource[k]
                if r >= 0:
                    lockv[k, r] = 1
            view = [1] * n + [nres]
            view[j] = shape[j]
            c = c + cj.reshape(view)
            d = d + lockv.reshape(view)
            self._lock_rows.append((lockv, tuple(view)))
        self.c = c
        self.d = d

        cons_ok = (c <= self.caps).all(axis=-1)
        in_box = np.zeros(shape, dtype=bool)
        for box in space.extra_boxes:
            in_box |= self._box_vertex_mask(box)
        self.in_box = in_box
        self.allowed = cons_ok & ~in_box

        self.is_top = np.zeros(shape, dtype=bool)
        self.is_top[space.top] = True

        pattern = np.ones(shape, dtype=bool)
        for j, tp in enumerate(space.profiles.threads):
            vec = np.array(
                [tp.lock_resource[k] >= 0 or k == tp.length + 1 for k in range(shape[j])]
            )
            pattern &= _axis_view(vec, j, n)
        self.p_pattern = pattern & ~self.is_top

        kc = (self.caps - c).astype(np.int32)
        calling = d > 0
        self.fin_spare = (calling * kc).sum(axis=-1, dtype=np.int32)
        self.inf_clause = (calling & (kc > 0) & (d <= kc)).any(axis=-1)

        self.edge_ok = []
        for j in range(n):
            lockv, view = self._lock_rows[j]
            open_ok = ((c + lockv.reshape(view)) <= self.caps).all(axis=-1)
            e = self.allowed & _shift_down(self.allowed, j) & open_ok
            for box in space.extra_boxes:
                e &= ~self._box_edge_mask(box, j)
            self.edge_ok.append(e)

        self.some_step = np.zeros(shape, dtype=bool)
        for e in self.edge_ok:
            self.some_step |= e
        self.deadlock_mask = self.allowed & ~self.is_top & ~self.some_step

        boxfree = np.ones(shape, dtype=bool)
        for box in space.extra_boxes:
            boxfree &= ~self._box_meets_cube_mask(box)
        self.maxcube_boxfree = boxfree

    # -- per-box masks ---------------------------------------------------

    def _box_vertex_mask(self, box: Box) -> np.ndarray:
        n = self.space.n
        mask = np.ones(self.space.shape, dtype=bool)
        for j, size in enumerate(self.space.shape):
            coords = np.arange(size)
            l, h = box.low[j], box.high[j]
            vec = (coords == l) if l == h else ((coords > l) & (coords <= h))
            mask &= _axis_view(vec, j, n)
        return mask

    def _box_edge_mask(self, box: Box, direction: int) -> np.ndarray:
        """Edges [v, v+e_j] meeting the box: endpoint inside, or the open part
        inside (fractional coordinate within [low_j, high_j[, others in range)."""
        n = self.space.n
        endpoint = _shift_down(self._box_vertex_mask(box), direction)
        open_edge = np.ones(self.space.shape, dtype=bool)
        for j, size in enumerate(self.space.shape):
            coords = np.arange(size)
            l, h = box.low[j], box.high[j]
            if j == direction:
                vec = np.zeros(size, dtype=bool) if l == h else ((coords >= l) & (coords < h))
            else:
                vec = (coords == l) if l == h else ((coords > l) & (coords <= h))
            open_edge &= _axis_view(vec, j, n)
        return endpoint | open_edge

    def _box_meets_cube_mask(self, box: Box) -> np.ndarray:
        """Vertices whose maximal future cube intersects the box."""
        n = self.space.n
        mask = np.ones(self.space.shape, dtype=bool)
        for j, size in enumerate(self.space.shape):
            coords = np.arange(size)
            extent = (coords < size - 1).astype(np.int64)
            l, h = box.low[j], box.high[j]
            if l == h:
                vec = (coords <= l) & (coords + extent >= l)
            else:
                vec = (coords + extent > l) & (coords <= h)
            mask &= _axis_view(vec, j, n)
        return mask

    # -- reachability ------------------------------------------------------

    def region_mask(self, t: Vertex) -> np.ndarray:
        n = self.space.n
        region = np.ones(self.space.shape, dtype=bool)
        for j, size in enumerate(self.space.shape):
            region &= _axis_view(np.arange(size) <= t[j], j, n)
        return region

    def reachability(self, t: Vertex) -> np.ndarray:
        """Vertices <= t from which t is reachable along allowed edges."""
        reach = np.zeros(self.space.shape, dtype=bool)
        if not self.allowed[t]:
            return reach
        if (
            t == self.space.top
            and not self.space.extra_boxes
            and not self.deadlock_mask.any()
        ):
            # Deadlock-free, no exclusions: every allowed vertex walks to the top.
            return self.allowed.copy()
        region = self.region_mask(t)
        reach[t] = True
        while True:
            grown = reach.copy()
            for j in range(self.space.n):
                grown |= region & self.edge_ok[j] & _shift_down(grown, j)
            if (grown == reach).all():
                return reach
            reach = grown


def _argwhere_vertices(mask: np.ndarray) -> list[Vertex]:
    return [tuple(int(x) for x in row) for row in np.argwhere(mask)]


def _bump(v: Vertex, j: int) -> Vertex:
    return v[:j] + (v[j] + 1,) + v[j + 1:]


# ---------------------------------------------------------------------------
# Deadlocks and doomed regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeadlockInfo:
    """A blocked vertex with the locking structure pinning it down: per called
    resource, the holding threads (at full capacity) and the callers waiting."""

    vertex: Vertex
    resources: tuple[str, ...]
    holders: dict[str, tuple[int, ...]]
    callers: dict[str, tuple[int, ...]]


def _holding_threads(space: StateSpace, v: Vertex, r: int) -> tuple[int, ...]:
    return tuple(
        j for j, tp in enumerate(space.profiles.threads) if tp.consumption[v[j]][r] == 1
    )


def _deadlock_info(space: StateSpace, v: Vertex) -> DeadlockInfo:
    calls = space.calls(v)
    holders = {
        name: _holding_threads(space, v, space.profiles.resource_index(name))
        for name in calls.resources
    }
    return DeadlockInfo(v, calls.resources, holders, dict(calls.callers))


def _is_deadlock(space: StateSpace, v: Vertex) -> bool:
    return (
        v != space.top
        and space.vertex_allowed(v)
        and not any(space.edge_allowed(v, j) for j in space.active_directions(v))
    )


def find_deadlocks(space: StateSpace) -> list[DeadlockInfo]:
    """All allowed non-final vertices with no allowed outgoing step."""
    try:
        engine = _GridEngine(space)
    except TypeError:
        engine = None
    if engine is not None:
        vertices = _argwhere_vertices(engine.deadlock_mask)
    else:
        vertices = [
            v
            for v in itertools.product(*map(range, space.shape))
            if _is_deadlock(space, v)
        ]
    return [_deadlock_info(space, v) for v in sorted(vertices)]


def _direction_blockers(space: StateSpace, v: Vertex):
    """For each active direction of a stuck vertex, what blocks it: the full
    resource it calls and/or the boxes its step runs into."""
    c = space.consumption(v)
    resources: set[int] = set()
    boxes: list[Box] = []
    for j in space.active_directions(v):
        blocked = False
        r = space.profiles.threads[j].lock_resource[v[j]]
        if r >= 0 and c[r] + 1 > space.capacities[r]:
            resources.add(r)
            blocked = True
        succ = _bump(v, j)
        for box in space.extra_boxes:
            if box.contains_vertex(succ) or box.contains_face(v, frozenset((j,))):
                if box not in boxes:
                    boxes.append(box)
                blocked = True
        if not blocked:
            raise NotADeadlockError(f"direction {j} of {v} is not blocked")
    return resources, boxes


def _trap_corners(space: StateSpace, v: Vertex, resources, boxes):
    """Lower corner (last blocking lock / wall start below) and upper corner
    (first blocking release / wall end above; lattice top on final
    coordinates) of the trap around a stuck vertex.  Coordinates at 0 stay
    thin: the trap cannot extend below the start."""
    low = []
    high = []
    for j in range(space.n):
        tp = space.profiles.threads[j]
        if v[j] == 0:
            low.append(0)
            high.append(0)
            continue
        lo_cands = [p for r in resources for p in tp.locks_by_resource[r] if p < v[j]]
        lo_cands += [b.low[j] for b in boxes if b.low[j] < v[j]]
        low.append(max(lo_cands, default=0))
        if v[j] == space.top[j]:
            high.append(space.top[j])
            continue
        hi_cands = [p for r in resources for p in tp.releases_by_resource[r] if p > v[j]]
        hi_cands += [b.high[j] for b in boxes if b.high[j] > v[j]]
        # no blocking release below the lattice end (as in truncated spaces,
        # where a lock may be held forever): the trap reaches the end
        high.append(min(hi_cands) if hi_cands else space.top[j])
    return tuple(low), tuple(high)


def doomed_box(space: StateSpace, v: Vertex) -> Box:
    """Half-open trap ]w, v] below a deadlock: no allowed edge leaves it."""
    space.check_vertex(v)
    if not _is_deadlock(space, v):
        raise NotADeadlockError(f"vertex {v} is not a deadlock")
    resources, boxes = _direction_blockers(space, v)
    low, _ = _trap_corners(space, v, resources, boxes)
    return Box(low, v)


@dataclass(frozen=True)
class EliminationResult:
    space: StateSpace                        # deadlock-free extension
    doomed_boxes: tuple[Box, ...]            # ]w, v] per deadlock, all rounds
    elimination_boxes: tuple[Box, ...]       # ]w, x] walls actually added
    rounds: tuple[tuple[DeadlockInfo, ...], ...]

    @property
    def deadlocks(self) -> tuple[DeadlockInfo, ...]:
        return tuple(d for rnd in self.rounds for d in rnd)


def eliminate_deadlocks(space: StateSpace) -> EliminationResult:
    """Wall off doomed regions until no deadlock remains.

    Each round finds all deadlocks and walls each inside ]w, x]; walls may
    block vertices one step further down, so the loop repeats.  Every round
    swallows at least its deadlock vertices, so the allowed set strictly
    shrinks and the loop terminates.  Path components between vertices
    outside all walls are unchanged.
    """
    current = space
    doomed: list[Box] = []
    walls: list[Box] = []
    rounds: list[tuple[DeadlockInfo, ...]] = []
    limit = 1 + int(np.prod(space.shape))
    while True:
        found = find_deadlocks(current)
        if not found:
            break
        rounds.append(tuple(found))
        new_walls = []
        for info in found:
            resources, boxes = _direction_blockers(current, info.vertex)
            low, high = _trap_corners(current, info.vertex, resources, boxes)
            doomed.append(Box(low, info.vertex))
            new_walls.append(Box(low, high))
        current = current.with_boxes(current.extra_boxes + tuple(new_walls))
        walls.extend(new_walls)
        for info in found:
            assert not current.vertex_allowed(info.vertex), "wall must swallow its deadlock"
        limit -= 1
        if limit <= 0:  # pragma: no cover - safety net
            raise PvcapError("deadlock elimination failed to reach a fixpoint")
    return EliminationResult(current, tuple(doomed), tuple(walls), tuple(rounds))


# ---------------------------------------------------------------------------
# Critical vertices and regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalInfo:
    """A vertex with disconnected future: executions branch irreversibly.

    r0 is the single called resource with one spare slot when the closed form
    applies (None for wall-induced criticals); components are the direction
    classes of the future link.
    """

    vertex: Vertex
    resources: tuple[str, ...]
    r0: str | None
    holders: dict[str, tuple[int, ...]]
    callers: dict[str, tuple[int, ...]]
    components: tuple[tuple[int, ...], ...]


def _critical_info(space: StateSpace, v: Vertex, formula: bool) -> CriticalInfo:
    calls = space.calls(v)
    c = space.consumption(v)
    holders = {}
    r0 = None
    for name in calls.resources:
        r = space.profiles.resource_index(name)
        holders[name] = _holding_threads(space, v, r)
        if formula and space.capacities[r] - c[r] == 1:
            r0 = name
    comps = components_as_direction_sets(future_link_complex(space, v))
    return CriticalInfo(v, calls.resources, r0, holders, dict(calls.callers), comps)


def find_critical_vertices(space: StateSpace) -> list[CriticalInfo]:
    """Allowed vertices whose future link is disconnected.

    Away from excluded boxes these are exactly the lock-pattern vertices with
    spare capacity 1; near boxes the generic link complex decides.
    """
    try:
        engine = _GridEngine(space)
    except TypeError:
        engine = None
    infos = []
    if engine is not None:
        formula_mask = (
            engine.p_pattern
            & engine.allowed
            & engine.maxcube_boxfree
            & ~engine.inf_clause
            & (engine.fin_spare == 1)
        )
        for v in _argwhere_vertices(formula_mask):
            infos.append(_critical_info(space, v, formula=True))
        near = engine.allowed & ~engine.is_top & ~engine.maxcube_boxfree
        for v in _argwhere_vertices(near):
            if complex_components(future_link_complex(space, v)) >= 2:
                infos.append(_critical_info(space, v, formula=False))
    else:
        for v in itertools.product(*map(range, space.shape)):
            if v == space.top or not space.vertex_allowed(v):
                continue
            if complex_components(future_link_complex(space, v)) >= 2:
                formula = space.classify(v).is_p and max_cube_box_free(space, v)
                infos.append(_critical_info(space, v, formula=formula))
    return sorted(infos, key=lambda i: i.vertex)


@dataclass(frozen=True)
class CriticalRegion:
    box: Box                                # ]w, v]: leaving it forces a component choice
    exits: tuple[tuple[int, ...], ...]      # link components, as direction sets
    successor: Vertex                       # first blocking releases above v


def critical_region(space: StateSpace, v: Vertex) -> CriticalRegion:
    """Trap below a critical vertex: a directed path leaves ]w, v] only by
    advancing one direction of a single link component past v."""
    comps = components_as_direction_sets(future_link_complex(space, v))
    if len(comps) < 2:
        raise NotCriticalError(f"vertex {v} has a connected future link")
    called = [space.profiles.resource_index(r) for r in space.calls(v).resources]
    boxes = []
    for j in space.active_directions(v):
        for box in space.extra_boxes:
            if box in boxes:
                continue
            if box.contains_vertex(_bump(v, j)) or box.contains_face(v, frozenset((j,))):
                boxes.append(box)
    low, high = _trap_corners(space, v, called, boxes)
    return CriticalRegion(Box(low, v), comps, high)


def higher_order_critical_regions(space: StateSpace, v: Vertex) -> tuple[Box, ...]:
    """Doomed regions that appear once the critical region around v is walled
    off with its exit slabs kept open: from inside them every directed path
    must pass the branch point at v."""
    region = critical_region(space, v)
    exit_dirs = tuple(sorted({j for comp in region.exits for j in comp}))
    wall = ExitBox(region.box.low, region.successor, top=v, exits=exit_dirs)
    extended = space.with_boxes(space.extra_boxes + (wall,))
    return eliminate_deadlocks(extended).doomed_boxes


# ---------------------------------------------------------------------------
# Global spare capacity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GlobalSpare:
    value: float  # int-valued, or math.inf
    witness: Vertex | None
    target_excluded: bool = False


def _surviving_components(space: StateSpace, v: Vertex, reach: np.ndarray) -> int:
    """Link components that still matter for the target: at least one of their
    directions steps onto a vertex from which the target is reachable."""
    count = 0
    for comp in components_as_direction_sets(future_link_complex(space, v)):
        for j in comp:
            if space.edge_allowed(v, j) and bool(reach[_bump(v, j)]):
                count += 1
                break
    return count


class _Minimum:
    """Smallest value seen, tie-broken by the lexicographically least vertex."""

    def __init__(self):
        self.value = INFINITE
        self.witness: Vertex | None = None

    def offer(self, value, vertex: Vertex):
        if value < self.value or (value == self.value and (self.witness is None or vertex < self.witness)):
            self.value = value
            self.witness = vertex


def global_spare_capacity(space: StateSpace, t: Vertex | None = None,
                          elimination: EliminationResult | None = None) -> GlobalSpare:
    """Minimum spare capacity over vertices that can still reach the target,
    with doomed regions walled off first.

    Away from the walls the closed form applies; next to them the value comes
    from the component count of the generic link (disconnected means 1).  A
    disconnection only counts when at least two components lead back to the
    target.  Returns infinity with no witness when nothing constrains the
    minimum.
    """
    if t is None:
        t = space.top
    space.check_vertex(t)
    if not space.vertex_allowed(t):
        raise ForbiddenVertexError(f"target {t} is forbidden")
    if t != space.top:
        # Links are target-relative: directions pinned at a target coordinate
        # do not exist, so sweep the sublattice [0, t] as a space of its own,
        # walling off the regions that cannot reach t.
        truncated = space.truncated(t)
        return global_spare_capacity(truncated, truncated.top, eliminate_deadlocks(truncated))
    if elimination is None:
        if space.extra_boxes:
            elimination = EliminationResult(space, (), (), ())
        else:
            elimination = eliminate_deadlocks(space)

    xt = elimination.space
    target_excluded = not xt.vertex_allowed(t)
    sweep_space = space if target_excluded else xt
    engine = _GridEngine(sweep_space)
    reach = engine.reachability(t)

    at_t = np.zeros(sweep_space.shape, dtype=bool)
    at_t[t] = True
    eligible = reach & engine.region_mask(t) & ~at_t

    # With no walls, no deadlocks and the top as target, every link component
    # trivially leads back to the target, so no survival checks are needed.
    plain = (
        t == sweep_space.top
        and not sweep_space.extra_boxes
        and not engine.deadlock_mask.any()
    )

    best = _Minimum()

    formula_mask = (
        engine.p_pattern & engine.allowed & engine.maxcube_boxfree & eligible & ~engine.inf_clause
    )
    if formula_mask.any():
        low = int(engine.fin_spare[formula_mask].min())
        if low == 1 and not plain:
            for v in _argwhere_vertices(formula_mask & (engine.fin_spare == 1)):
                if _surviving_components(sweep_space, v, reach) >= 2:
                    best.offer(1, v)
            rest = formula_mask & (engine.fin_spare >= 2)
            if rest.any():
                low2 = int(engine.fin_spare[rest].min())
                best.offer(low2, _argwhere_vertices(rest & (engine.fin_spare == low2))[0])
        else:
            best.offer(low, _argwhere_vertices(formula_mask & (engine.fin_spare == low))[0])

    # Vertices whose future cube meets a wall: classify by link components.
    near = engine.allowed & ~engine.is_top & ~engine.maxcube_boxfree & eligible
    for v in _argwhere_vertices(near):
        if _surviving_components(sweep_space, v, reach) >= 2:
            best.offer(1, v)

    # Vertices swallowed by walls but outside every doomed trap still carry
    # executions; a genuine branch point there also caps the minimum at 1.
    if not target_excluded and elimination.elimination_boxes:
        pure_engine = _GridEngine(space)
        pure_reach = pure_engine.reachability(t)
        swallowed = (
            pure_engine.allowed & ~engine.allowed & pure_reach
            & pure_engine.region_mask(t) & ~at_t
        )
        for v in _argwhere_vertices(swallowed):
            if any(b.contains_vertex(v) for b in elimination.doomed_boxes):
                continue
            if _surviving_components(space, v, pure_reach) >= 2:
                best.offer(1, v)

    return GlobalSpare(best.value, best.witness, target_excluded)


# ---------------------------------------------------------------------------
# Chain-based bound on the number of execution classes
# ---------------------------------------------------------------------------


class ChainBound:
    """Chain counting over (critical vertex, link component) nodes for a fixed
    target; reachability arrays and the inter-node transition table are built
    once and shared across source queries."""

    def __init__(self, space: StateSpace, t: Vertex, elimination: EliminationResult | None = None):
        if t != space.top:
            # branch points are target-relative, like the links they come from
            space = space.truncated(t)
            t = space.top
            elimination = eliminate_deadlocks(space)
        if elimination is None:
            if space.extra_boxes:
                elimination = EliminationResult(space, (), (), ())
            else:
                elimination = eliminate_deadlocks(space)
        xt = elimination.space
        self._base = space
        self._pure_fallback: "ChainBound | None" = None
        self.work = xt if xt.vertex_allowed(t) else space
        self.t = t
        self._engine = _GridEngine(self.work)
        self.reach_t = self._engine.reachability(t)
        self.nodes: list[tuple[Vertex, tuple[int, ...]]] = []
        self._reach_of: dict[Vertex, np.ndarray] = {}
        for info in find_critical_vertices(self.work):
            if not self.reach_t[info.vertex]:
                # A chain through an off-path critical vertex cannot exit to t.
                continue
            self._reach_of[info.vertex] = self._engine.reachability(info.vertex)
            for comp in info.components:
                self.nodes.append((info.vertex, comp))
        self.nodes.sort(key=lambda node: (sum(node[0]), node))
        self.critical_vertices = {c for c, _ in self.nodes}
        # transitions[i][k]: chain may continue from node k to node i
        self._into: list[list[int]] = []
        for i, (c, _) in enumerate(self.nodes):
            preds = []
            for k in range(i):
                c2, comp2 = self.nodes[k]
                if c2 != c and self._exits_reach(c2, comp2, self._reach_of[c]):
                    preds.append(k)
            self._into.append(preds)
        self._exit_ok = [
            self._exits_reach(c, comp, self.reach_t) for c, comp in self.nodes
        ]

    def _exits_reach(self, c: Vertex, comp, targets: np.ndarray) -> bool:
        return any(
            self.work.edge_allowed(c, j) and bool(targets[_bump(c, j)])
            for j in comp
        )

    def bound(self, source: Vertex) -> int:
        if not self.work.vertex_allowed(source) and self._base.vertex_allowed(source):
            # source swallowed by a wall: count chains in the unwalled space
            if self._pure_fallback is None:
                self._pure_fallback = ChainBound(
                    self._base, self.t, EliminationResult(self._base, (), (), ())
                )
            return self._pure_fallback.bound(source)
        if not self.reach_t[source]:
            return 0
        source_critical = source in self.critical_vertices
        counts = []
        total = 0 if source_critical else 1  # the empty chain
        for i, (c, comp) in enumerate(self.nodes):
            here = 0
            if bool(self._reach_of[c][source]) and (not source_critical or c == source):
                here += 1
            for k in self._into[i]:
                here += counts[k]
            counts.append(here)
            if here and self._exit_ok[i]:
                total += here
        return total


def component_upper_bound(space: StateSpace, source: Vertex, t: Vertex,
                          elimination: EliminationResult | None = None) -> int:
    """Upper bound on the number of execution classes from source to t.

    Counts chains of (critical vertex, link component) nodes ordered by
    reachability, entered from the source and exited to the target; the empty
    chain counts one.  Paths from a critical source must leave through one of
    its own components, so only chains starting there are counted for it.
    Returns 0 when the target is unreachable from the source.
    """
    return ChainBound(space, t, elimination).bound(source)


# ---------------------------------------------------------------------------
# Crashes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrashScenario:
    """Thread `thread` stops forever between steps after_step and after_step+1,
    keeping every lock it holds there."""

    thread: int
    after_step: int
    held_locks: tuple[str, ...]
    last_lock_position: int | None


def make_crash_scenario(program: Program, thread, after_step: int) -> CrashScenario:
    if isinstance(thread, str):
        try:
            j = program.thread_index(thread)
        except KeyError:
            raise CrashScenarioError(f"no thread named {thread!r}") from None
    else:
        j = int(thread)
    if not 0 <= j < program.n_threads:
        raise CrashScenarioError(f"no thread {thread}")
    body = program.threads[j]
    if not 0 <= after_step <= body.length:
        raise CrashScenarioError(
            f"crash point {after_step} outside [0, {body.length}] for thread {body.name}"
        )
    held: dict[str, int] = {}
    last_lock = None
    for pos in range(1, after_step + 1):
        act = body.action_at(pos)
        if act.is_lock:
            held[act.resource] = pos
            last_lock = pos
        else:
            held.pop(act.resource, None)
    return CrashScenario(j, after_step, tuple(sorted(held)), last_lock)


@dataclass(frozen=True)
class CrashReport:
    scenario: CrashScenario
    kappa_before: float
    kappa_after: float
    witness_before: Vertex | None
    witness_after: Vertex | None
    case: str  # "decreased" | "unchanged" | "increased"
    inequality_holds: bool  # kappa_after >= kappa_before - 1


def analyze_crash(space: StateSpace, scenario: CrashScenario,
                  target: Vertex | None = None) -> CrashReport:
    """Global spare capacity after freezing one thread at its crash point.

    The crashed thread's coordinate is dropped and its held locks permanently
    reduce the capacities seen by the remaining threads.
    """
    program = space.program
    if not 0 <= scenario.thread < program.n_threads:
        raise CrashScenarioError(f"no thread index {scenario.thread}")
    recomputed = make_crash_scenario(program, scenario.thread, scenario.after_step)
    if recomputed.held_locks != scenario.held_locks:
        raise CrashScenarioError(
            f"held locks {scenario.held_locks} do not match the program ({recomputed.held_locks})"
        )
    remaining = tuple(
        t for j, t in enumerate(program.threads) if j != scenario.thread
    )
    if not remaining:
        raise CrashScenarioError("cannot crash the only thread")
    reduced = Program(program.resources, remaining)
    caps = list(space.capacities)
    for name in scenario.held_locks:
        caps[space.profiles.resource_index(name)] -= 1
    crashed = StateSpace(reduced, capacities=tuple(caps))
    if target is not None:
        crashed.check_vertex(target)

    before = global_spare_capacity(space)
    after = global_spare_capacity(crashed, target)
    if after.value < before.value:
        case = "decreased"
    elif after.value > before.value:
        case = "increased"
    else:
        case = "unchanged"
    holds = after.value >= before.value - 1
    return CrashReport(
        scenario=scenario,
        kappa_before=before.value,
        kappa_after=after.value,
        witness_before=before.witness,
        witness_after=after.witness,
        case=case,
        inequality_holds=holds,
    )


# ---------------------------------------------------------------------------
# Full analysis
# ---------------------------------------------------------------------------


def connectivity_of(value) -> ConnectivityClass:
    if value == INFINITE:
        return ConnectivityClass.contractible()
    return ConnectivityClass.exactly(int(value) - 2)


@dataclass(frozen=True)
class VertexRow:
    vertex: Vertex
    kind: str
    c: tuple[int, ...]
    d: tuple[int, ...]
    spare: float | None  # None for forbidden / swallowed vertices
    connectivity: ConnectivityClass | None
    flags: tuple[str, ...]


@dataclass(frozen=True)
class AnalysisReport:
    source: Vertex
    target: Vertex
    global_spare: float
    witness: Vertex | None
    connectivity: ConnectivityClass
    deadlocks: tuple[DeadlockInfo, ...]
    doomed_boxes: tuple[Box, ...]
    elimination_boxes: tuple[Box, ...]
    elimination_rounds: int
    criticals: tuple[CriticalInfo, ...]
    critical_regions: tuple[CriticalRegion, ...]
    component_bound: int
    target_excluded: bool
    per_vertex: tuple[VertexRow, ...] | None = None

    @property
    def has_deadlocks(self) -> bool:
        return bool(self.deadlocks)

    @property
    def has_criticals(self) -> bool:
        return bool(self.criticals)


def analyze(program: Program, source: Vertex | None = None, target: Vertex | None = None,
            per_vertex: bool = False) -> AnalysisReport:
    """Run the whole pipeline: eliminate doomed regions, compute the global
    spare capacity and its witness, list deadlocks, criticals and their
    regions, and bound the execution classes between source and target."""
    space = StateSpace(program)
    if source is None:
        source = space.origin
    if target is None:
        target = space.top
    space.check_vertex(source)
    space.check_vertex(target)

    elimination = eliminate_deadlocks(space)
    spare = global_spare_capacity(space, target, elimination=elimination)
    criticals = tuple(find_critical_vertices(elimination.space))
    regions = tuple(critical_region(elimination.space, c.vertex) for c in criticals)
    bound = component_upper_bound(space, source, target, elimination=elimination)

    rows = None
    if per_vertex:
        rows = tuple(_per_vertex_rows(space, elimination, spare, criticals, target))

    return AnalysisReport(
        source=source,
        target=target,
        global_spare=spare.value,
        witness=spare.witness,
        connectivity=connectivity_of(spare.value),
        deadlocks=elimination.deadlocks,
        doomed_boxes=elimination.doomed_boxes,
        elimination_boxes=elimination.elimination_boxes,
        elimination_rounds=len(elimination.rounds),
        criticals=criticals,
        critical_regions=regions,
        component_bound=bound,
        target_excluded=spare.target_excluded,
        per_vertex=rows,
    )


def _per_vertex_rows(space: StateSpace, elimination: EliminationResult,
                     spare: GlobalSpare, criticals, target: Vertex):
    xt = elimination.space
    engine = _GridEngine(space)
    sweep_space = space if spare.target_excluded else xt
    reach = _GridEngine(sweep_space).reachability(target)
    deadlock_set = {d.vertex for d in elimination.deadlocks}
    critical_set = {c.vertex for c in criticals}
    rows = []
    for v in _argwhere_vertices(engine.p_pattern):
        c = space.consumption(v)
        calls = space.calls(v)
        flags = []
        value: float | None
        if not space.vertex_allowed(v):
            flags.append("forbidden")
            value = None
        elif v in deadlock_set:
            flags.append("deadlock")
            value = 0
        elif any(b.contains_vertex(v) for b in elimination.doomed_boxes):
            flags.append("doomed")
            value = None
        elif v in critical_set:
            flags.append("critical")
            value = 1
        elif xt.vertex_allowed(v):
            if max_cube_box_free(xt, v):
                value = spare_capacity_at(xt, v)
            else:
                value = INFINITE  # connected next to a wall: no finite certificate
        else:
            value = None  # swallowed by a wall without being doomed
        if value is not None and space.vertex_allowed(v) and not reach[v]:
            flags.append("unreachable-to-target")
        connectivity = None
        if value is not None:
            connectivity = ConnectivityClass.empty() if value == 0 else connectivity_of(value)
        rows.append(
            VertexRow(v, space.classify(v).kind, tuple(c), tuple(calls.d), value, connectivity, tuple(flags))
        )
    return rows
