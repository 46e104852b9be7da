"""Exception hierarchy shared by the toolkit and mapped to CLI exit codes."""
from __future__ import annotations


class BVGraphError(Exception):
    exit_code = 1


class ValidationError(BVGraphError, ValueError):
    """Malformed or inconsistent input."""

    exit_code = 2


class UnknownGeneratorError(ValidationError, KeyError):
    def __init__(self, name: str):
        super().__init__(f"unknown generator {name!r}")
        self.name = name

    def __str__(self) -> str:
        return self.args[0]


class ParityError(ValidationError):
    """A substitution or operation would break the Z/2 grading."""


class CapExceededError(BVGraphError):
    """A size limit (legs, vertices) was exceeded."""

    exit_code = 3


class InvariantViolation(BVGraphError):
    """An identity that must hold exactly was found to fail."""

    exit_code = 4
