"""Exception types raised across the package."""

from __future__ import annotations


class VqaExplainError(Exception):
    """Base class for all package errors."""


class ParseError(VqaExplainError, ValueError):
    """Input text is not well-formed JSON (or CSV)."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class SchemaError(VqaExplainError, ValueError):
    """A required field is missing or has the wrong type."""

    def __init__(self, message: str, field: str | None = None, row: int | None = None):
        super().__init__(message)
        self.field = field
        self.row = row


class ValidationError(VqaExplainError, ValueError):
    """Input is structurally valid but violates a domain constraint."""

    def __init__(self, message: str, entity_id: str | None = None):
        super().__init__(message)
        self.entity_id = entity_id


class UnknownEntityError(VqaExplainError, KeyError):
    """An id does not resolve inside a scene graph."""

    def __init__(self, entity_id: str):
        super().__init__(entity_id)
        self.entity_id = entity_id

    def __str__(self) -> str:
        return f"unknown entity id {self.entity_id!r}"


class TrainingError(VqaExplainError, ValueError):
    """The language model could not be trained from the given corpus."""


class DataError(VqaExplainError, ValueError):
    """Evaluation inputs are inconsistent (missing metadata, disjoint sets)."""
