"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative numerical routine failed to reach its tolerance.

    Carries the achieved error estimate when one is available.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class SamplerFailure(RuntimeError):
    """A rejection sampler exhausted its iteration cap.

    Carries the conditional parameters (m, v) for diagnosis.
    """

    def __init__(self, message, m=None, v=None):
        super().__init__(message)
        self.m = m
        self.v = v
