"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: validation failures (bad data,
broken invariants, contract misuse) exit 1, configuration problems
(unresolvable names, bad flag combinations) exit 2, and I/O failures
exit 3.
"""

from __future__ import annotations


class UnidetError(Exception):
    """Base class; ``exit_code`` drives the CLI."""

    exit_code = 1


class ValidationError(UnidetError):
    """Input data violates a schema or a documented invariant."""

    exit_code = 1


class ContractError(ValidationError):
    """An operation was called outside its documented precondition."""

    exit_code = 1


class ConfigurationError(UnidetError):
    """A name, alias, or option does not resolve to anything known."""

    exit_code = 2


class InputOutputError(UnidetError):
    """Filesystem-level failure (missing file, unreadable, ...)."""

    exit_code = 3
