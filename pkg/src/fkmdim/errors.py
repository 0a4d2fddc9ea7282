"""Exception hierarchy shared by the library and the CLI."""


class FkError(Exception):
    """Base class for all package errors."""


class ConfigError(FkError, ValueError):
    """Invalid parameters or configuration (CLI exit code 2)."""


class TruncationError(FkError, ValueError):
    """A point's truncation cannot support the requested orbit length (exit code 4)."""


class InstanceTooLarge(FkError, ValueError):
    """An exhaustive oracle was asked to solve an instance above its cap (exit code 4)."""


class Infeasible(FkError):
    """A finite optimization or feasibility problem has no solution."""
