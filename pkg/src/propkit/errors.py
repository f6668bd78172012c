"""Exception types raised by propkit."""


class PropkitError(Exception):
    """Base class for all numerical and domain errors in propkit."""


class ResonanceError(PropkitError):
    """A matrix function denominator is singular (eigenvalue on the resonance lattice)."""

    def __init__(self, message, eigenvalue=None, critical_tau=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.critical_tau = critical_tau


class CausticError(ResonanceError):
    """The Van Vleck determinant is singular: the kernel has a focal point here."""


class ConvergenceError(PropkitError):
    """An iterative or adaptive procedure did not reach the requested tolerance."""

    def __init__(self, message, estimate=None, residual=None):
        super().__init__(message)
        self.estimate = estimate
        self.residual = residual


class DomainError(PropkitError, ValueError):
    """Inputs lie outside the domain where a formula is valid."""


class NullFieldError(DomainError):
    """Operation needs a non-null field (or a null one) and got the other kind."""
