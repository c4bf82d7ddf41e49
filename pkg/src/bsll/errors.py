"""Exception hierarchy shared by every module."""

from __future__ import annotations


class BsllError(Exception):
    """Base class for all errors raised by the package."""


class CapExceededError(BsllError):
    """An input is larger than the configured desk-scale cap."""


class NonTerminationError(BsllError):
    """Collection did not reach a normal form within the rewrite cap."""


class StructuralError(BsllError):
    """A verified structural property failed; carries a counterexample."""

    def __init__(self, message: str, counterexample=None):
        super().__init__(message)
        self.counterexample = counterexample


class OracleInconclusiveError(BsllError):
    """Coset enumeration ran out of room before closing the table."""


class InternalConsistencyError(BsllError):
    """Two independent computations of the same quantity disagree."""


class InputError(BsllError):
    """Malformed user input (bad prime, bad matrix file, ...)."""
