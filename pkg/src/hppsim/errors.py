"""Exception types raised by the simulator."""


class HppError(Exception):
    """Base class for every error the package raises on purpose."""


class EmptyFeasibleSet(HppError, ValueError):
    pass


class NonFiniteDerivative(HppError, ArithmeticError):
    pass


class OutOfRange(HppError, ValueError):
    pass


class NonPositiveWind(HppError, ValueError):
    pass


class CtOutOfRange(HppError, ValueError):
    pass


class NegativeIrradiance(HppError, ValueError):
    pass


class DenominatorNonpositive(HppError, ArithmeticError):
    """Raised when ``v + r_e * i_c <= 0``, i.e. the battery left its voltage envelope."""


class ParseError(HppError):
    """Config or CSV input could not be read.

    ``where`` carries the path and, when known, the line or field name.
    """

    def __init__(self, message: str, where: str = ""):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class ValidationError(HppError, ValueError):
    """A parsed scenario violates one of its invariants."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        super().__init__(f"{invariant} ({detail})" if detail else invariant)


class SimulationError(HppError):
    """Wraps a subsystem failure with the simulated time it happened at."""

    def __init__(self, time: float, cause: Exception):
        self.time = time
        self.cause = cause
        super().__init__(f"t={time:.3f}s: {type(cause).__name__}: {cause}")
