"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """Raised when an argument violates a documented precondition."""


class ModelError(RuntimeError):
    """Raised when input data fails a structural requirement (ellipticity,
    invertibility of a coefficient, degenerate boundary condition)."""


class SpectrumHitError(ModelError):
    """Raised when a shifted operator cannot be factorized because lambda is
    (numerically) in the spectrum.  Carries a condition estimate."""

    def __init__(self, msg, condition=None):
        super().__init__(msg)
        self.condition = condition


class SingularityError(ModelError):
    """Raised when a dense inversion inside the extension-theory layer fails;
    carries the name of the operator that was singular."""

    def __init__(self, msg, operator=None):
        super().__init__(msg)
        self.operator = operator
