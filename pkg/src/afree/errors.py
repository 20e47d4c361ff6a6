"""Exception types raised across the package."""


class AfreeError(ValueError):
    """Base class for all domain errors."""


class DimensionError(AfreeError):
    pass


class OperatorIsZero(AfreeError):
    pass


class UnsupportedOrderZero(AfreeError):
    pass


class DegenerateFrequency(AfreeError):
    pass


class DegenerateVector(AfreeError):
    pass


class DegreeOverflow(AfreeError):
    pass


class DegreeUnderflow(AfreeError):
    pass


class EmptyFamily(AfreeError):
    pass


class EmptyMeasure(AfreeError):
    pass


class InvalidExponent(AfreeError):
    pass


class ScenarioContradictsHypothesis(AfreeError):
    """The chosen polar vector lies in the wave cone, so the regularization
    argument has nothing to contradict."""


class SpecFormatError(AfreeError):
    """Malformed input file; the message carries the offending field or line."""


class ConeDegenerate(UserWarning):
    """Regularizer built for a polar vector inside the wave cone."""


class OutsideDomain(AfreeError):
    pass
