"""Exception hierarchy shared by every module."""


class HybridMechError(ValueError):
    """Base class for all errors raised by :mod:`hybridmech`."""


class InvalidProfile(HybridMechError):
    """A profile violates the normalized-profile invariants."""


class DegenerateExpert(InvalidProfile):
    """All expert values are equal, so they cannot be normalized."""


class DegenerateBids(InvalidProfile):
    """Both bids are zero, so the normalized low bid is undefined."""


class InvalidLottery(HybridMechError):
    pass


class InvalidCurve(HybridMechError):
    pass


class UnknownMechanism(HybridMechError, KeyError):
    # KeyError would quote the message
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class WrongClass(HybridMechError):
    """The mechanism lacks the class tag a check or adversary requires."""


class NonMonotone(HybridMechError):
    """A selection probability decreased in the agent's own bid."""


class NotDeterministic(HybridMechError):
    pass


class ZeroWelfare(HybridMechError):
    pass
