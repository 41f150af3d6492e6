"""Exception types raised across the package."""


class WExpandError(ValueError):
    """Base class for all errors raised by wexpand."""


class OverlappingModes(WExpandError):
    pass


class ZeroState(WExpandError):
    pass


class NotNormalized(WExpandError):
    pass


class InvalidPermutation(WExpandError):
    pass


class InvalidReflectivity(WExpandError):
    pass


class NonUnitary(WExpandError):
    pass


class PhotonNumberMismatch(WExpandError):
    pass


class DuplicateMode(WExpandError):
    pass


class InvalidN(WExpandError):
    pass


class NotSingleOccupied(WExpandError):
    pass


class InvalidSpec(WExpandError):
    pass


class NoFeasiblePoint(RuntimeError):
    """The optimizer found no lattice point meeting the fidelity constraint.

    This indicates a broken simulator rather than bad user input.
    """
