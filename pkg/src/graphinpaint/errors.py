"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end.
"""


class InpaintError(Exception):
    exit_code = 5


class InvalidArgument(InpaintError, ValueError):
    exit_code = 2


class InvalidRate(InvalidArgument):
    pass


class InvalidLength(InvalidArgument):
    pass


class InvalidRange(InvalidArgument):
    pass


class InvalidKernelLength(InvalidArgument):
    pass


class InvalidGap(InvalidArgument):
    pass


class GapOutOfBounds(InvalidGap):
    pass


class SignalTooShort(InvalidArgument):
    pass


class ParamMismatch(InvalidArgument):
    pass


class DimensionMismatch(InvalidArgument):
    pass


class NotInvertible(InvalidArgument):
    pass


class UnsupportedFormat(InpaintError):
    exit_code = 3


class EmptySignal(UnsupportedFormat):
    pass


class AudioIoError(InpaintError, OSError):
    exit_code = 5


class NotEnoughFrames(InpaintError):
    exit_code = 4


class NoValidQueries(InpaintError):
    exit_code = 4


class NoTransitionFound(InpaintError):
    exit_code = 4

    hint = ("try lowering the weight threshold (weight_threshold) or "
            "widening the transition search range (eps_seconds)")


class TooManyCandidates(InpaintError):
    exit_code = 5


class OutOfBounds(InpaintError):
    exit_code = 4
