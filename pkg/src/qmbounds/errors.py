"""Exception hierarchy shared by all modules."""


class QMBoundsError(Exception):
    """Base class for every error raised by this package."""


class NonHermitianInput(QMBoundsError, ValueError):
    pass


class DimensionMismatch(QMBoundsError, ValueError):
    pass


class SingularMatrix(QMBoundsError, ArithmeticError):
    pass


class DimensionOverflow(QMBoundsError, ValueError):
    pass


class BasisUnsupported(QMBoundsError, TypeError):
    pass


class NoStructure(QMBoundsError, TypeError):
    pass


class UnbalancedSpectrum(QMBoundsError, ValueError):
    pass


class NegativeTarget(QMBoundsError, ValueError):
    pass


class NonIntegerTargets(QMBoundsError, ValueError):
    pass


class InvalidPartition(QMBoundsError, ValueError):
    pass


class InvalidP(QMBoundsError, ValueError):
    pass


class InvalidArgs(QMBoundsError, ValueError):
    pass


class ZeroInformation(QMBoundsError, ArithmeticError):
    pass


class NotOrthogonal(QMBoundsError, ValueError):
    pass


class SingularTransformedFisher(QMBoundsError, ArithmeticError):
    pass


class FlatLikelihood(QMBoundsError, ArithmeticError):
    pass


class MomentMismatch(QMBoundsError, ValueError):
    pass


class ScenarioError(QMBoundsError, ValueError):
    """Malformed or inconsistent scenario file."""
