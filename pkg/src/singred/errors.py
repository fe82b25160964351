"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-contract input (CLI exit code 1)."""


class UnsupportedError(InputError):
    """Operation needs data the object does not carry, e.g. a matrix representation."""


class InvarianceError(InputError):
    """A function failed its H-invariance certificate."""

    def __init__(self, message, sample=None, residual=None):
        super().__init__(message)
        self.sample = sample
        self.residual = residual


class IntegrationError(RuntimeError):
    """Numerical integration produced a non-finite state."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class DegenerateFormError(ArithmeticError):
    """A two-form that should be nondegenerate is singular on the supplied directions."""
