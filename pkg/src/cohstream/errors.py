"""Exception types shared across the package.

The CLI maps these onto exit codes: parse/validation problems exit with 3,
numerical failures with 4.
"""


class CohstreamError(Exception):
    """Base class for all package errors."""


class ParseError(CohstreamError):
    """Malformed input file. Carries row/column context in the message."""


class ValidationError(CohstreamError):
    """Inputs violate a documented precondition (shapes, lengths, labels,
    configuration ranges)."""


class SizeError(ValidationError):
    """Window or vector length is not an admissible power of two."""


class MissingClassError(ValidationError):
    """A class index expected in the training data never occurs."""

    def __init__(self, class_index: int):
        super().__init__(f"no training samples labelled {class_index}")
        self.class_index = class_index


class StabilityError(ValidationError):
    """Autoregressive parameters define an explosive process."""


class ConditioningError(CohstreamError):
    """A matrix required in the pipeline is numerically singular."""
