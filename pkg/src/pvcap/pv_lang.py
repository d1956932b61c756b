"""PV program front-end: parse, validate, serialize, and synthesize programs.

A program is a set of resource declarations (each with a positive capacity)
plus a list of threads, where a thread is a sequence of lock (``P``) and
release (``V``) actions on declared resources, one action per integer
position 1..len(thread).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import GeneratorError, InvalidProgramError, ParseError

LOCK = "P"
RELEASE = "V"

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class ResourceDecl:
    name: str
    capacity: int


@dataclass(frozen=True)
class Action:
    kind: str  # LOCK or RELEASE
    resource: str

    @property
    def is_lock(self) -> bool:
        return self.kind == LOCK

    def __str__(self) -> str:
        return f"{self.kind}({self.resource})"


@dataclass(frozen=True)
class Thread:
    name: str
    actions: tuple[Action, ...]

    @property
    def length(self) -> int:
        """Number of positions; action k sits at position k, 1-based."""
        return len(self.actions)

    def action_at(self, position: int) -> Action:
        return self.actions[position - 1]


@dataclass(frozen=True)
class Program:
    resources: tuple[ResourceDecl, ...]
    threads: tuple[Thread, ...]

    @property
    def n_threads(self) -> int:
        return len(self.threads)

    @property
    def resource_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.resources)

    def capacity(self, name: str) -> int:
        for r in self.resources:
            if r.name == name:
                return r.capacity
        raise KeyError(name)

    def thread_index(self, name: str) -> int:
        for j, t in enumerate(self.threads):
            if t.name == name:
                return j
        raise KeyError(name)


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    thread: str | None = None
    position: int | None = None


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_program(program: Program) -> list[Violation]:
    """Check all well-formedness rules; an empty list means the program is valid.

    Violations are data, not exceptions: a structurally complete but broken
    program (capacity 0, double lock, ...) is representable and reported.
    """
    violations: list[Violation] = []
    declared = set()
    for r in program.resources:
        if r.name in declared:
            violations.append(Violation("duplicate-resource", f"resource {r.name} declared twice"))
        declared.add(r.name)
        if r.capacity < 1:
            violations.append(Violation("capacity", f"capacity of {r.name} must be >= 1, got {r.capacity}"))

    if program.n_threads < 1:
        violations.append(Violation("no-threads", "program must declare at least one thread"))

    seen_threads = set()
    for thread in program.threads:
        if thread.name in seen_threads:
            violations.append(
                Violation("duplicate-thread", f"thread {thread.name} declared twice", thread=thread.name)
            )
        seen_threads.add(thread.name)

        open_lock: dict[str, int] = {}  # resource -> lock position
        for pos in range(1, thread.length + 1):
            act = thread.action_at(pos)
            if act.resource not in declared:
                violations.append(
                    Violation(
                        "undeclared-resource",
                        f"thread {thread.name} position {pos}: undeclared resource {act.resource}",
                        thread=thread.name,
                        position=pos,
                    )
                )
                continue
            if act.is_lock:
                if act.resource in open_lock:
                    violations.append(
                        Violation(
                            "alternation",
                            f"thread {thread.name} position {pos}: double lock of {act.resource}",
                            thread=thread.name,
                            position=pos,
                        )
                    )
                open_lock[act.resource] = pos
            else:
                if act.resource not in open_lock:
                    violations.append(
                        Violation(
                            "alternation",
                            f"thread {thread.name} position {pos}: release of {act.resource} without lock",
                            thread=thread.name,
                            position=pos,
                        )
                    )
                else:
                    del open_lock[act.resource]
        for resource, pos in sorted(open_lock.items()):
            violations.append(
                Violation(
                    "alternation",
                    f"thread {thread.name}: lock of {resource} at position {pos} is never released",
                    thread=thread.name,
                    position=pos,
                )
            )
    return violations


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def parse_program(text: str) -> Program:
    """Parse PV text into a validated Program.

    Format: ``resource <name> capacity <int>`` lines, then
    ``thread <name>: <actions>`` lines with whitespace-separated ``P(<name>)``
    / ``V(<name>)`` actions.  ``#`` starts a comment.  Raises ParseError on
    grammar errors and InvalidProgramError when validation fails.
    """
    resources: list[ResourceDecl] = []
    threads: list[Thread] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("resource"):
            m = re.fullmatch(r"resource\s+(\S+)\s+capacity\s+(\S+)", stripped)
            if not m:
                raise ParseError("malformed resource declaration", line=lineno)
            name, cap_text = m.group(1), m.group(2)
            if not _IDENT.fullmatch(name):
                raise ParseError(f"invalid resource name {name!r}", line=lineno)
            try:
                capacity = int(cap_text)
            except ValueError:
                raise ParseError(f"capacity must be an integer, got {cap_text!r}", line=lineno) from None
            resources.append(ResourceDecl(name, capacity))
        elif stripped.startswith("thread"):
            head, sep, body = line.partition(":")
            if not sep:
                raise ParseError("thread declaration needs a ':'", line=lineno)
            m = re.fullmatch(r"\s*thread\s+(\S+)\s*", head)
            if not m or not _IDENT.fullmatch(m.group(1)):
                raise ParseError("malformed thread declaration", line=lineno)
            threads.append(Thread(m.group(1), _parse_actions(body, lineno, len(head) + 1)))
        else:
            raise ParseError(f"expected 'resource' or 'thread', got {stripped.split()[0]!r}", line=lineno)

    program = Program(tuple(resources), tuple(threads))
    violations = validate_program(program)
    if violations:
        raise InvalidProgramError(violations)
    return program


def _parse_actions(body: str, lineno: int, offset: int) -> tuple[Action, ...]:
    actions = []
    pos = 0
    while pos < len(body):
        if body[pos].isspace():
            pos += 1
            continue
        m = re.match(r"([PV])\(([A-Za-z_][A-Za-z0-9_]*)\)", body[pos:])
        if not m:
            raise ParseError("malformed action (expected P(<name>) or V(<name>))",
                             line=lineno, column=offset + pos + 1)
        actions.append(Action(m.group(1), m.group(2)))
        pos += m.end()
    return tuple(actions)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def serialize_program(program: Program) -> str:
    """Render a program in the canonical text form; parse(serialize(p)) == p."""
    lines = [f"resource {r.name} capacity {r.capacity}" for r in program.resources]
    for t in program.threads:
        actions = " ".join(str(a) for a in t.actions)
        lines.append(f"thread {t.name}: {actions}" if actions else f"thread {t.name}:")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Threshold-program synthesis
# ---------------------------------------------------------------------------


def generate_threshold_program(n: int, capacities) -> Program:
    """Build the n-thread program whose minimal spare capacity is
    sum(capacities) - (l-1)*n, attained where every thread has issued its
    first l-1 locks (l = number of resources).

    Each thread has the shape P..P V..V over all l resources (releases in
    reverse order).  Lock columns are filled column-major: resources
    1..l-1 each repeated up to its capacity, the remainder of column l-1
    with resource l, and column l with each thread's missing resource.
    """
    caps = tuple(int(c) for c in capacities)
    l = len(caps)
    if l < 1:
        raise GeneratorError("need at least one capacity")
    if not l < n:
        raise GeneratorError(f"need fewer resources than threads, got l={l}, n={n}")
    for k, c in enumerate(caps, start=1):
        if not 1 <= c < n:
            raise GeneratorError(f"capacity {c} of resource {k} must satisfy 1 <= capacity < n={n}")
    if not sum(caps) > (l - 1) * n:
        raise GeneratorError(
            f"need sum(capacities) > (l-1)*n, got {sum(caps)} <= {(l - 1) * n}"
        )

    grid: list[list[int | None]] = [[None] * l for _ in range(n)]
    filler = [k for k in range(l - 1) for _ in range(caps[k])]
    slots = [(col, row) for col in range(l - 1) for row in range(n)]
    for (col, row), k in zip(slots, filler):
        grid[row][col] = k
    for col, row in slots[len(filler):]:
        assert col == l - 2, "leftover slots must all sit in the second-to-last column"
        grid[row][col] = l - 1
    for row in range(n):
        missing = set(range(l)) - {k for k in grid[row][: l - 1]}
        assert len(missing) == 1, "each thread must lock l-1 distinct resources before its last column"
        grid[row][l - 1] = missing.pop()

    resources = tuple(ResourceDecl(f"r{k + 1}", caps[k]) for k in range(l))
    threads = []
    for row in range(n):
        order = [f"r{k + 1}" for k in grid[row]]
        actions = tuple(Action(LOCK, r) for r in order) + tuple(Action(RELEASE, r) for r in reversed(order))
        threads.append(Thread(f"t{row + 1}", actions))
    program = Program(resources, tuple(threads))
    assert not validate_program(program)
    return program
