"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ConvexBoundsError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ConvexBoundsError):
    """Syntax error in an expression, located by byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifier(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class DomainError(ConvexBoundsError, ArithmeticError):
    """The expression is not defined (or not finite) at the requested point."""

    def __init__(self, message: str, x: float | None = None):
        super().__init__(message if x is None else f"{message} at x={x!r}")
        self.x = x


class IntervalError(ConvexBoundsError, ValueError):
    pass


class ParameterError(ConvexBoundsError, ValueError):
    pass


class PreconditionError(ConvexBoundsError):
    """A hypothesis of a bound could not be certified."""


class ConvexityNotCertified(PreconditionError):
    def __init__(self, certificate, expected: str = "convex"):
        super().__init__(
            f"{expected} not certified for derivative level {certificate.target} "
            f"on [{certificate.interval.a}, {certificate.interval.b}]: "
            f"verdict {certificate.verdict.value}, max violation {certificate.max_violation:.3g}"
        )
        self.certificate = certificate


class NoSuchSplit(PreconditionError):
    """f' is not concave-then-convex on the interval."""


class SymmetryViolated(PreconditionError):
    def __init__(self, x: float, defect: float):
        super().__init__(f"weight not symmetric about the midpoint: |g(a+b-x)-g(x)| = {defect:.3g} at x={x!r}")
        self.x = x
        self.defect = defect


class NegativeWeight(PreconditionError):
    def __init__(self, x: float, value: float):
        super().__init__(f"negative value {value:.3g} at x={x!r}")
        self.x = x
        self.value = value


class NotPositive(PreconditionError):
    def __init__(self, x: float, value: float):
        super().__init__(f"function must be positive, got {value:.3g} at x={x!r}")
        self.x = x
        self.value = value


class QuadratureError(ConvexBoundsError):
    """Adaptive quadrature failed to converge or met a non-finite sample."""


class DivergenceError(QuadratureError):
    pass


class TargetNotReached(ConvexBoundsError):
    def __init__(self, gap: float, depth: int, enclosure=None):
        super().__init__(f"gap {gap:.3g} still above target at depth {depth}")
        self.gap = gap
        self.depth = depth
        self.enclosure = enclosure
