"""
Exception hierarchy for coxeter-forge.

Verifiers never raise for a failing property; they return a Verdict. The
exceptions below signal bad input, violated preconditions, or (for
InvariantViolation) a construction step that broke a stage invariant.
"""

from typing import Any, Optional


class ForgeError(Exception):
    """Base class for every error raised by the forge package"""


class DiagramError(ForgeError):
    """Malformed Coxeter diagram or unknown type label"""


class GeometryError(ForgeError):
    """Incidence structure that is not a geometry over its type set"""


class FlagError(GeometryError):
    """A vertex set passed as a flag is not pairwise incident"""


class SubspaceError(ForgeError):
    """Zero, full or ambient-mismatched subspace"""


class PreconditionError(ForgeError):
    """An operation was called outside its precondition"""


class TaskNotViable(PreconditionError):
    """A scheduled task no longer satisfies its precondition"""


class IsomorphismError(ForgeError):
    """A partial map is not an isomorphism of generated substructures"""


class FormatError(ForgeError):
    """Malformed or unsupported file contents"""


class InvariantViolation(ForgeError):
    """A stage invariant failed after a construction step"""

    def __init__(self, message: str, verdict: Any = None, task: Optional[dict] = None):
        super().__init__(message)
        self.verdict = verdict
        self.task = task
