"""Exception types shared across the package."""


class ParameterDomainError(ValueError):
    """A distribution or function parameter lies outside its valid domain."""


class NumericalFailure(RuntimeError):
    """A sampler or evaluator produced a non-finite or degenerate result.

    ``iteration`` is the Gibbs iteration at which the failure occurred (``None``
    outside a chain) and ``state`` an optional snapshot for post-mortem.
    """

    def __init__(self, message, iteration=None, state=None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration
        self.state = state


class CalibrationError(RuntimeError):
    """A root-finding calibration could not bracket its target."""
