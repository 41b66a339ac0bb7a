"""Shared exception types."""


class SingularPointError(ValueError):
    """Raised where a closed form is singular (zero parameter vector, zero angle, ...).

    Callers that need a value at such points fall back to the Monte-Carlo
    oracle or to the cancelled limit forms.
    """


class BlowUpError(RuntimeError):
    """Raised when an ODE trajectory leaves the finite floats.

    ``time`` carries the first flow time at which a non-finite state was seen.
    """

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time
