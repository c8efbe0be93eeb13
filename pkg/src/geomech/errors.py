"""Exception hierarchy shared by every geomech module."""


class GeomechError(Exception):
    """Base class for all library errors."""


# numerical backbone
class StepUnderflow(GeomechError):
    pass


class NonFiniteState(GeomechError):
    pass


class NonFiniteValue(GeomechError):
    pass


class NotSeparable(GeomechError):
    pass


class SingularJacobian(GeomechError):
    pass


class MaxIterations(GeomechError):
    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class LineSearchFailure(GeomechError):
    pass


class NotSPD(GeomechError):
    pass


# mechanics
class GradientMismatch(GeomechError):
    pass


class AntisymmetryViolation(GeomechError):
    pass


class ConstraintViolation(GeomechError):
    pass


class SingularGram(GeomechError):
    pass


# variational core
class HillBoundary(GeomechError):
    pass


class EnergyMismatch(GeomechError):
    pass


# contact machinery
class PrimitiveMismatch(GeomechError):
    pass


class EmptyLevelSet(GeomechError):
    pass


class NotContactType(GeomechError):
    pass


# models
class BadCoefficients(GeomechError):
    pass


class OriginState(GeomechError):
    pass


class DomainError(GeomechError):
    pass


class OffLevelSet(GeomechError):
    pass


# harness
class SchemaError(GeomechError):
    pass


class UnknownScenario(GeomechError):
    pass


class ColumnMissing(GeomechError):
    pass
