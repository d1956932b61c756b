"""Exception types shared across the package."""

from __future__ import annotations


class PvcapError(Exception):
    """Base class for all pvcap errors."""


class ParseError(PvcapError):
    """Syntax error in a PV program text, with source location."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "")
            loc = f" ({loc})"
        super().__init__(message + loc)


class InvalidProgramError(PvcapError):
    """A structurally parsed program violates the well-formedness rules."""

    def __init__(self, violations):
        self.violations = list(violations)
        summary = "; ".join(v.message for v in self.violations[:3])
        if len(self.violations) > 3:
            summary += f"; ... ({len(self.violations)} violations)"
        super().__init__(f"invalid program: {summary}")


class GeneratorError(PvcapError):
    """Preconditions of the threshold-program generator are not met."""


class OutOfBoundsError(PvcapError):
    """A vertex or cube lies outside the coordinate lattice."""


class ForbiddenVertexError(PvcapError):
    """An operation requires an allowed vertex but got a forbidden one."""


class VertexClassError(PvcapError):
    """An operation requires a different vertex class (e.g. not a lock-pattern vertex)."""


class BoxInterferenceError(PvcapError):
    """An excluded box touches the region a closed-form operation assumes box-free."""


class NoSuccessorError(PvcapError):
    """A coordinate has no release position above it for the requested resources."""


class NotADeadlockError(PvcapError):
    """doomed_box was called on a vertex that is not a deadlock."""


class NotCriticalError(PvcapError):
    """critical_region was called on a vertex that is not critical."""


class PathOverflowError(PvcapError):
    """Tame-path enumeration would exceed the configured cap."""

    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"path enumeration exceeds cap of {cap}")


class EnumerationSizeError(PvcapError):
    """Explicit forbidden-box enumeration would be too large."""


class CrashScenarioError(PvcapError):
    """A crash scenario is inconsistent with the program it refers to."""
