"""Exception types shared across the package."""

from __future__ import annotations


class ValidationError(ValueError):
    """Invalid input, tagged with the dotted path of the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class GridMismatchError(ValueError):
    pass


class EmbeddingError(ValueError):
    """A configuration is not (numerically) an embedding."""


class SingularStateError(RuntimeError):
    """The flow left the open set of embeddings.

    ``node`` and ``time`` locate the failure. ``trajectory`` holds the
    accepted part of the run, when one exists.
    """

    def __init__(self, message: str, *, node: int | None = None,
                 time: float | None = None, trajectory=None):
        self.node = node
        self.time = time
        self.trajectory = trajectory
        super().__init__(message)
