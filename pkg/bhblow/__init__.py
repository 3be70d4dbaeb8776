class BlowupError(Exception):
    def __init__(self, message, value=None):
        if value is not None:
            message = f"{message} ({value!r})"
        super().__init__(message)
        self.value = value


class ParameterError(BlowupError, ValueError):
    pass


class NumericError(BlowupError):
    pass


class ResolutionError(BlowupError):
    def __init__(self, message, max_trustworthy=None):
        super().__init__(message, max_trustworthy)
        self.max_trustworthy = max_trustworthy


class AccuracyError(BlowupError):
    def __init__(self, message, estimate=None):
        super().__init__(message, estimate)
        self.estimate = estimate


class SchemeBlowup(NumericError):
    """
    The integrator produced non-finite values before the run reached a
    physical stopping criterion. The last finite state is kept in 'state'.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class VerificationFailure(BlowupError):
    def __init__(self, message, bound=None, X=None):
        if bound is not None:
            message = f"{message}: {bound} violated at X={X!r}"
        super().__init__(message)
        self.bound = bound
        self.X = X


class ConfigError(BlowupError):
    def __init__(self, message, field=None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
