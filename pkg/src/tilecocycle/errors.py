"""Exception hierarchy shared by all modules.

``UsageError`` subclasses map to CLI exit code 2, ``NumericGuard`` subclasses
to exit code 4.
"""


class TilingError(Exception):
    """Base class for all package errors."""


class UsageError(TilingError, ValueError):
    """Invalid parameters supplied by the caller."""


class NumericGuard(TilingError, ArithmeticError):
    """A numeric safety check refused to produce a result."""


class Degenerate(NumericGuard):
    """A boundary tie that cannot be classified without guessing."""


class Reducible(UsageError):
    def __init__(self, root: int):
        super().__init__(f"cubic is reducible over Z (integer root {root}); a divisor of r is a root")
        self.root = root


class NoComplexRoot(UsageError):
    pass


class NonPerron(UsageError):
    pass


class NotPrimitive(UsageError):
    pass


class InconsistentDriver(TilingError):
    def __init__(self, x, expected, got):
        super().__init__(f"driver disagrees with geometric oracle at x={x}: oracle {expected}, driver {got}")
        self.x, self.expected, self.got = x, expected, got


class OverflowGuard(NumericGuard):
    pass


class ZeroVector(UsageError):
    pass


class RadiusTooLarge(NumericGuard):
    pass


class BoxTooLarge(NumericGuard):
    pass


class DegenerateShape(NumericGuard):
    pass


class IncompleteCorona(TilingError):
    pass


class NotSaturated(NumericGuard):
    pass
