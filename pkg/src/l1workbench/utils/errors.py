"""Exception hierarchy shared by the library and the CLI."""


class WorkbenchError(Exception):
    """Base class for all workbench errors."""


class PreconditionError(WorkbenchError, ValueError):
    """Input violates a documented pre-condition."""


class ParseError(PreconditionError):
    """Text syntax (ordinal, family spec, vector, config) could not be parsed."""


class RegistryFrozenError(PreconditionError):
    """Allocation requested on a registry opened read-only."""


class ResourceCapError(WorkbenchError, RuntimeError):
    """A configured enumeration, depth or iteration cap was hit."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class MembershipError(WorkbenchError):
    """A certificate failed to replay; `node` names the first failing node."""

    def __init__(self, message: str, node: str = ""):
        super().__init__(message)
        self.node = node


class IllegalMoveError(PreconditionError):
    """A game move breaks the rules; `move` is the offending move."""

    def __init__(self, message: str, move=None):
        super().__init__(message)
        self.move = move
