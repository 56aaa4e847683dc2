"""Semantic exception hierarchy. The CLI maps each class to a distinct exit code."""


class FairrampError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(FairrampError):
    """A numeric parameter is outside its admissible range."""


class DataValidationError(FairrampError):
    """Input data violates a declared invariant (range, duplicate id, non-finite value)."""


class ParseError(DataValidationError):
    """A data file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyDatasetError(FairrampError):
    """An operation received no examples."""


class EmptyGroupError(FairrampError):
    """A declared group has no members in the data at hand."""


class UnknownGroupError(FairrampError):
    """A prediction was requested for a group the model was not trained on."""


class MissingFieldError(FairrampError):
    """A required optional field (label or sensitive bit) is absent."""


class MismatchError(FairrampError):
    """Model and data disagree on structure (group count, criterion fields)."""


class SerializationError(FairrampError):
    """A model file is truncated or malformed."""


class VersionError(SerializationError):
    """A model file declares an unsupported format version."""


class DegenerateStatisticsError(FairrampError):
    """Estimated statistics are degenerate (zero joint cell, vacuous constraint)."""


class DisjointnessError(FairrampError):
    """Two datasets that must be disjoint share example ids."""


class UnsupportedCriterionError(FairrampError):
    """The requested criterion is not supported by this operation."""
