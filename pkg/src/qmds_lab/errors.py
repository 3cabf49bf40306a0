"""Exception hierarchy shared by every module of the package."""


class QmdsLabError(Exception):
    """Base class for all errors raised by qmds_lab."""


# field
class NotPrime(QmdsLabError, ValueError):
    pass


class TooLarge(QmdsLabError, ValueError):
    pass


class DuplicatePoint(QmdsLabError, ValueError):
    pass


class ZeroMultiplier(QmdsLabError, ValueError):
    pass


class BadDimensions(QmdsLabError, ValueError):
    pass


class ParameterViolation(QmdsLabError, ValueError):
    pass


# qstate
class DuplicateLabel(QmdsLabError, ValueError):
    pass


class BadDim(QmdsLabError, ValueError):
    pass


class DimensionMismatch(QmdsLabError, ValueError):
    pass


class NotUnitary(QmdsLabError, ValueError):
    pass


class OutOfRange(QmdsLabError, ValueError):
    pass


class BadPartition(QmdsLabError, ValueError):
    pass


class ResourceTooSmall(QmdsLabError, ValueError):
    pass


class LabelMismatch(QmdsLabError, ValueError):
    pass


class SizeCap(QmdsLabError, MemoryError):
    """A dense amplitude vector would exceed the configured cap."""


# qmds
class BudgetExceeded(QmdsLabError, RuntimeError):
    """Raised both for the distance-sweep budget and for per-edge ledger caps."""


class ResidualTooLarge(QmdsLabError, ArithmeticError):
    pass


# network
class BadHelperSet(QmdsLabError, ValueError):
    pass


class HubNotHelper(QmdsLabError, ValueError):
    pass


class UnknownEdge(QmdsLabError, KeyError):
    pass


class NotAPowerOfQ(QmdsLabError, ValueError):
    pass


# protocol
class AccessViolation(QmdsLabError, PermissionError):
    pass


class AlreadyErased(QmdsLabError, ValueError):
    pass


# bounds
class FidelityMismatch(QmdsLabError, ArithmeticError):
    pass


class Unsupported(QmdsLabError, NotImplementedError):
    pass


class NotADistribution(QmdsLabError, ValueError):
    pass


class NotNormalized(QmdsLabError, ValueError):
    pass


class ZeroProjection(QmdsLabError, ArithmeticError):
    pass
