"""Exception and warning types shared across the toolkit."""


class FinslerError(Exception):
    """Base class for all toolkit errors."""


class ZeroVector(FinslerError):
    """Metric evaluation requested at the zero vector."""


class OutsideDomain(FinslerError):
    """Vector (or curve sample) lies outside the metric's conic domain."""


class NotUnitSpeed(FinslerError):
    """Curve handed to a lift is not unit-speed for the relevant metric."""


class Unreachable(FinslerError):
    """A required one-way distance is infinite."""


class EmptyComplement(FinslerError):
    """Horizon construction needs a nonempty complement on the grid."""


class PositivityViolated(FinslerError):
    """A projective change produced a non-positive metric somewhere."""


class StiffnessFailure(FinslerError):
    """Geodesic integration step underflowed, typically near a domain edge."""


class InvalidCoefficients(FinslerError):
    """Coefficient fields fail a structural requirement (shape, symmetry)."""


class InvariantViolation(FinslerError):
    """A model-level invariant failed at a concrete sample."""

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class SchemaError(FinslerError):
    """Model or config file fails validation; carries a JSON-pointer path."""

    def __init__(self, pointer, message):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer


class JacobianIllConditioned(UserWarning):
    """Shooting-fan Jacobian became ill conditioned; scan continued."""
