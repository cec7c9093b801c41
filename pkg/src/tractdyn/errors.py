"""Exception hierarchy shared by all modules.

Each family carries a CLI exit code so the command line front end can map
failures without knowing the module internals.
"""


class TractDynError(Exception):
    exit_code = 1


# functions
class DerivativeUnstable(TractDynError):
    exit_code = 4


class UnknownModel(TractDynError, ValueError):
    exit_code = 2


# tract
class TractError(TractDynError):
    exit_code = 3


class WindowTooCoarse(TractError):
    pass


class SeedBelowThreshold(TractError):
    pass


class OutsideWindow(TractError):
    pass


class TractNotFound(TractError):
    pass


# growth
class GrowthError(TractDynError):
    exit_code = 3


class CircleMissesTract(GrowthError):
    pass


class OutOfRange(GrowthError):
    pass


class NotExpanding(GrowthError):
    pass


# wvcheck
class WVError(TractDynError):
    exit_code = 4


class ExpansionTooWeak(WVError):
    pass


class NoConvergence(WVError):
    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


# odeorder
class OdeError(TractDynError):
    exit_code = 5


class ParseError(OdeError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class EmptyEquation(OdeError):
    pass


class InsufficientTerms(OdeError):
    pass


class NoKappaCandidates(OdeError):
    pass


class PreconditionViolation(TractDynError):
    exit_code = 6


# outer sequences
class ImageEscapesWindow(TractDynError):
    exit_code = 6
