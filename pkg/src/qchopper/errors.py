"""Exception types raised by the package."""


class ChopperError(Exception):
    """Base class."""


class ProtocolError(ChopperError, ValueError):
    """Invalid drive protocol definition."""


class ZeroCouplingError(ChopperError, ValueError):
    """Gamma_0 vanishes, so the scattering envelopes are undefined."""


class IllConditionedError(ChopperError, ArithmeticError):
    """The geometric tail factor 1/(1 - rho) is too large to trust.

    ``condition`` holds the estimate 1/|1 - rho|.
    """

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class ConvergenceError(ChopperError, ArithmeticError):
    """An adaptive refinement hit its limit before meeting the tolerance."""


class CutoffError(ChopperError, ValueError):
    """Floquet cutoff too small for the protocol's harmonic support."""


class LatticeError(ChopperError, ValueError):
    """Invalid or unsafe time-domain lattice configuration."""


class WrapAroundError(LatticeError):
    """Scattered field re-entered the scattering region of the periodic lattice."""


class MemoryBudgetError(LatticeError):
    """Two-excitation state would exceed the configured memory budget."""


class CircuitError(ChopperError, ValueError):
    """Circuit parameters outside the supported operating point."""
