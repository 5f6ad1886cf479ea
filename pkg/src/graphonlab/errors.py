"""Exception hierarchy shared by every graphonlab module."""


class GraphonLabError(Exception):
    """Base class; the CLI maps subclasses onto exit codes."""

    exit_code = 2


class DomainError(GraphonLabError, ValueError):
    """A parameter lies outside the domain of the operation."""


class SizeError(GraphonLabError, ValueError):
    """Pattern graph is larger than the host graph."""


class ParseError(GraphonLabError, ValueError):
    """Malformed serialized input.  ``offset`` is the byte position, if known."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class CapacityError(GraphonLabError):
    """Input exceeds a hard size cap of an exhaustive routine."""

    exit_code = 3


class EmptyClassError(GraphonLabError):
    """A graph class has no members of the requested order."""


class Inconclusive(GraphonLabError):
    """A finite-n certificate cannot decide the requested quantity."""
