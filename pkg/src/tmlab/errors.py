"""Exception hierarchy shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InvalidDimensionError(DomainError):
    """The spatial dimension must be an integer >= 2."""


class ValidationError(ValueError):
    """A composite object (profile, config) fails its structural invariants."""


class DivergentWeightError(ValueError):
    """The requested weight exponent makes the radial integral diverge."""


class DegenerateInputError(ValueError):
    """The operation needs a nonzero / nondegenerate input."""


class PreconditionError(ValueError):
    """A documented operation precondition is violated."""


class SupercriticalError(PreconditionError):
    """Exponent coefficient at or beyond the critical threshold.

    Raised by the maximizers: above the critical coefficient the supremum is
    infinite, witnessed by moser.plateau_lower_bound diverging along the
    concentrating sequence, so there is nothing to optimize.
    """
