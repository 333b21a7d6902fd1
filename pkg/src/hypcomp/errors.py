"""Exception hierarchy shared by every module."""


class HypcompError(Exception):
    """Base class for all errors raised by hypcomp."""


class NestedCylinders(HypcompError, ValueError):
    """Two cylinders are nested where disjoint ones were required."""


class DepthTooShallow(HypcompError, ValueError):
    """A cylinder is too coarse for a quantity to be constant on it."""


class AsymmetricKernel(HypcompError, ValueError):
    pass


class NonzeroDiagonal(HypcompError, ValueError):
    pass


class ElementaryGroup(HypcompError, ValueError):
    """Rank below 2: the free group is elementary."""


class ParameterAtOrBelowDelta(HypcompError, ValueError):
    pass


class ParameterOutOfRange(HypcompError, ValueError):
    pass


class DimensionCap(HypcompError, ValueError):
    pass


class SizeCap(HypcompError, ValueError):
    pass


class NoConvergence(HypcompError, ArithmeticError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class VanishingCoefficient(HypcompError, ArithmeticError):
    pass


class ParseError(HypcompError, ValueError):
    pass


class ValidationError(HypcompError, ValueError):
    pass
