"""Exception hierarchy shared by the pipeline stages."""

from __future__ import annotations


class DataError(Exception):
    """Base class for any failure caused by bad or insufficient input data."""


class OutOfBoundsError(DataError):
    pass


class SchemaError(DataError):
    pass


class EmptyContentError(SchemaError):
    pass


class DuplicateIdError(DataError):
    pass


class InfeasibleError(DataError):
    """A synthesis step could not be satisfied for this page."""


class PlacementInfeasibleError(InfeasibleError):
    pass


class ColorHybridInfeasibleError(InfeasibleError):
    pass


class NoContentError(InfeasibleError):
    pass


class ConversationFormatError(DataError):
    pass


class MissingSourceError(DataError):
    pass


class AnnotatorError(Exception):
    """The external annotator failed, timed out or returned garbage."""
