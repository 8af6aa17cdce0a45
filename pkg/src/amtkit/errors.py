"""Exception types raised across the toolkit.

Everything that signals bad *input data* derives from :class:`DataError` so
the CLI can map it to a single exit code.
"""


class DataError(ValueError):
    """Base class for errors caused by invalid input data."""


# notes and sequences
class NegativeTimeError(DataError):
    pass


class OffsetBeforeOnsetError(DataError):
    pass


class PitchOutOfRangeError(DataError):
    pass


class ProgramOutOfRangeError(DataError):
    pass


class UnknownSlakhClassError(DataError, KeyError):
    pass


# token codec
class EventOutOfSegmentError(DataError):
    pass


class InvalidPitchError(DataError):
    pass


class InvalidTokenIdError(DataError):
    pass


class MalformedTokenFileError(DataError):
    pass


# metrics
class EmptyReferenceError(DataError):
    pass


class InstanceTooLargeError(DataError):
    pass


# datasets
class MalformedSmfError(DataError):
    pass


class UnsupportedSmfTypeError(DataError):
    pass


class EmptyMixtureError(DataError):
    pass


class EmptySplitError(DataError):
    pass


class TooFewStemsError(DataError):
    pass


# audio frontend
class SampleRateMismatchError(DataError):
    pass


class NonFiniteSampleError(DataError):
    pass
