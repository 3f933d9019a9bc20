from __future__ import annotations

from typing import Optional


class SeqselError(Exception):
    """Base class for errors raised by seqsel."""


class DatasetError(SeqselError, ValueError):
    """Raised when a dataset file or table cannot be ingested."""

    def __init__(
        self,
        message: str,
        *,
        row: Optional[int] = None,
        column: Optional[str] = None,
    ):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class ContractError(SeqselError, ValueError):
    """Raised when an operation is called outside its preconditions."""


class CheckpointError(SeqselError, RuntimeError):
    """Raised when a checkpoint directory is missing, unreadable or inconsistent."""
