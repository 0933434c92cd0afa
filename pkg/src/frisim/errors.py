"""Typed exceptions shared across the simulator."""

from __future__ import annotations


class FrisimError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FrisimError):
    """Input outside the physical or mathematical domain of an operation."""


class SingularSurface(FrisimError):
    """Surface synthesis or reflection evaluation hit a vanishing denominator."""


class DegenerateGeometry(FrisimError):
    """Geometric query with coincident or near-coincident points."""


class DimensionMismatch(FrisimError):
    """Vector arguments disagree in length."""


class ConfigError(FrisimError):
    """Invalid scenario configuration; carries the offending field path."""

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class EpisodeFinished(FrisimError):
    """step() called on an environment whose episode already ended."""


class ProtocolError(FrisimError):
    """Bridge message violates the wire protocol.

    code is one of "parse", "dim", "episode". Parse errors carry the byte
    offset of the first offending byte when known.
    """

    def __init__(self, code: str, message: str, offset: int | None = None) -> None:
        self.code = code
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
