"""Exception types raised across the package."""


class SwitchforceError(Exception):
    pass


class DomainError(SwitchforceError, ValueError):
    """A parameter lies outside the admissible domain of an operation."""


class NonStiffRegime(SwitchforceError, ValueError):
    """The contact subsystem is not stiffer than the free-motion one (K2 <= K1)."""


class ModeOutsideDomain(SwitchforceError, ValueError):
    pass


class DegenerateCone(SwitchforceError):
    """A cone transit never reaches its exit ray (a visible eigenvector traps it)."""


class VisibleEigenvector(SwitchforceError):
    pass


class UnsupportedJordanForm(SwitchforceError):
    pass


class NegativeForceInContact(SwitchforceError):
    def __init__(self, message, interval=None, time=None):
        super().__init__(message)
        self.interval = interval
        self.time = time


class OutOfHorizon(SwitchforceError, ValueError):
    pass


class ZenoGuard(SwitchforceError):
    """Switch events accumulated faster than the configured minimum separation.

    ``partial`` holds the :class:`~switchforce.sim.SimResult` integrated up to
    the abort, so callers can still inspect or write the event log.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NoBracket(SwitchforceError):
    def __init__(self, message, lo_certificate=None, hi_certificate=None):
        super().__init__(message)
        self.lo_certificate = lo_certificate
        self.hi_certificate = hi_certificate


class ConfigError(SwitchforceError, ValueError):
    pass
