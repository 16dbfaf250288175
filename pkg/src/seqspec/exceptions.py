"""Exception types shared across the package."""


class SeqSpecError(Exception):
    """Base class for package errors."""


class InputError(SeqSpecError, ValueError):
    """Malformed or inconsistent input (shapes, ranges, counts)."""


class DegenerateRowError(SeqSpecError):
    """A row of the eigenvector matrix has (numerically) zero norm."""

    def __init__(self, rows):
        self.rows = list(rows)
        super().__init__(f"zero-norm eigenvector rows: {self.rows}")


class StreamExhausted(SeqSpecError):
    """A finite sample stream ran out before the algorithm stopped."""


class InternalInvariantError(SeqSpecError, AssertionError):
    """An internal numerical invariant was violated."""
