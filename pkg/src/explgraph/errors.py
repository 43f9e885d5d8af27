"""Exception and warning types shared across the package."""

__all__ = [
    "ExplGraphError",
    "TermSyntaxError",
    "CyclicGraph",
    "DanglingReference",
    "UndeclaredValue",
    "ExplosionLimit",
    "MissingParameter",
    "AllZero",
    "ZeroEvidence",
    "Unparseable",
    "InconsistentExplanation",
    "LengthMismatch",
    "VanishingAcceptance",
    "InvalidRow",
    "NoPath",
    "FileFormatError",
    "ExplGraphWarning",
]


class ExplGraphError(Exception):
    """Base class for all errors raised by this package."""


class TermSyntaxError(ExplGraphError):
    """A term or symbol is malformed."""


class CyclicGraph(ExplGraphError):
    """The head-calls-body relation contains a directed cycle."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle through goals: " + " -> ".join(map(str, self.cycle)))


class DanglingReference(ExplGraphError):
    """A body references a goal id that does not exist."""


class UndeclaredValue(ExplGraphError):
    """A switch instance uses a value missing from the switch declaration."""


class ExplosionLimit(ExplGraphError):
    """Explanation enumeration exceeded the configured limit."""


class MissingParameter(ExplGraphError):
    """A parameter table does not cover a switch used by the graph."""


class AllZero(ExplGraphError):
    """Every explanation of the goal has probability zero."""


class ZeroEvidence(ExplGraphError):
    """An observed goal has inside probability zero under the parameters."""


class Unparseable(ExplGraphError):
    """The sentence has no derivation under the grammar."""


class InconsistentExplanation(ExplGraphError):
    """An explanation does not correspond to any derivation of the input."""


class LengthMismatch(ExplGraphError):
    """Paired lists have different lengths."""


class VanishingAcceptance(ExplGraphError):
    """Rejection sampling exceeded the tolerated rejection rate."""


class InvalidRow(ExplGraphError):
    """A data row does not fit the model specification."""


class NoPath(ExplGraphError):
    """No path exists between the requested nodes."""


class FileFormatError(ExplGraphError):
    """A data file is malformed; message carries file and line context."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class ExplGraphWarning(UserWarning):
    """Diagnostics that do not stop a computation."""
