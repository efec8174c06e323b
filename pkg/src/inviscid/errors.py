"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericsError(RuntimeError):
    """A numerical procedure failed to produce a trustworthy result."""


class QuadratureError(NumericsError):
    """Adaptive quadrature did not converge; the message names the panel."""


class BracketingError(NumericsError):
    """Root bracketing exceeded the overflow bound before enclosing a root."""


class InstabilityError(NumericsError):
    """A simulation produced non-finite values.

    Attributes carry the simulation time and the advective CFL number at the
    last healthy diagnostic so runs can be post-mortemed from logs.
    """

    def __init__(self, t: float, cfl: float):
        self.t = t
        self.cfl = cfl
        super().__init__(
            f"non-finite field values at t={t:.6g} (advective CFL {cfl:.3g}); "
            "reduce dt or the CFL target"
        )
