"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: FormatError -> 3, InvariantError -> 4.
"""


class FuseLensError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(FuseLensError):
    """A file could not be parsed or violates its on-disk contract."""


class InvariantError(FuseLensError):
    """An in-memory value violates a domain-type invariant or precondition."""
