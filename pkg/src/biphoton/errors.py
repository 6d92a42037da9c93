"""Exception types shared across the package."""


class BiphotonError(Exception):
    """Base class for all domain errors raised by :mod:`biphoton`."""


class CoverageError(BiphotonError):
    """A time grid captures too little of a wavepacket's norm."""


class CoverageWarning(UserWarning):
    """A time grid truncates a measurable (but tolerable) part of a wavepacket."""


class NormalizationError(BiphotonError):
    pass


class DegenerateOutcomeError(BiphotonError):
    """The requested output component has (numerically) zero probability."""


class ImpossibleHeraldError(BiphotonError):
    """The detection event used for heralding has vanishing probability."""


class ComputationError(BiphotonError):
    pass


class NoFeasibleStartError(BiphotonError):
    """Every optimizer start point produced an impossible herald."""
