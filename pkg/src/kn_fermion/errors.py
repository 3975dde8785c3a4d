"""Exception hierarchy shared by every module of the package."""


class KNError(Exception):
    """Base class for all package errors."""


# curve models
class DegenerateLattice(KNError):
    pass


class CoincidentPoints(KNError):
    pass


class UnsupportedGenusOperation(KNError):
    pass


class DegreeMismatch(KNError):
    pass


class AbelConditionViolated(KNError):
    pass


class ExpansionOrderExceeded(KNError):
    pass


class SpecialDivisorUnresolved(KNError):
    pass


# bases and actions
class SpecialConfigurationFailure(KNError):
    pass


class WindowTooSmall(KNError):
    pass


class NonGenericData(KNError):
    pass


class ResidualTooLarge(KNError):
    pass


class IndexOutOfRange(KNError, ValueError):
    pass


class RankMismatch(KNError):
    pass


# bundles
class SingularFraming(KNError):
    pass


class SampleOnDivisor(KNError):
    pass


# wedge space and equivalences
class NotEventuallyConsecutive(KNError, ValueError):
    pass


class SingularGamma(KNError):
    pass


class ShapeMismatch(KNError):
    pass


class NotHighestSlot(KNError):
    pass


# command line
class ConfigError(KNError):
    pass


class CheckFailure(KNError):
    pass
