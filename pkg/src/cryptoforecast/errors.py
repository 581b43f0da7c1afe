"""Exception taxonomy shared across the package.

CLI exit-code mapping: ``SpecError`` and plain ``ValueError`` (argument
errors) map to 1, ``DataError`` subclasses map to 2, anything else to 3.
"""

from __future__ import annotations


class CryptoForecastError(Exception):
    """Base class for package-specific errors."""


class DataError(CryptoForecastError):
    """A problem with ingested market data."""


class ParseError(DataError):
    """Malformed CSV content; carries the 1-based line number."""

    def __init__(self, row: int, message: str) -> None:
        super().__init__(f"row {row}: {message}")
        self.row = row


class DuplicateDateError(DataError):
    """Two records share the same calendar date."""


class InconsistentCandleError(DataError):
    """A candle with low > high."""


class EmptySliceError(DataError):
    """A date slice matched no records."""


class InsufficientDataError(DataError):
    """Not enough records/examples for the requested operation."""


class SpecError(CryptoForecastError):
    """Invalid run-spec file: unknown/missing key, bad type, bad section."""

    def __init__(self, message: str, *, key: str | None = None, line: int | None = None) -> None:
        parts = []
        if key is not None:
            parts.append(f"key '{key}'")
        if line is not None:
            parts.append(f"line {line}")
        super().__init__(f"{message} [{', '.join(parts)}]" if parts else message)
        self.key = key
        self.line = line


class DivisionGuardError(CryptoForecastError, ValueError):
    """A denominator that must be nonzero is zero; names the offending index."""


class UnderdeterminedError(CryptoForecastError, ValueError):
    """Fewer rows than free parameters in a least-squares fit."""


class EnsembleMemberError(CryptoForecastError):
    """A vote member failed to train; names the member."""


class SelfConsistencyError(CryptoForecastError):
    """Emitted report files disagree with metrics recomputed from them."""
