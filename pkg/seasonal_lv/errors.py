class SeasonalModelError(Exception):
    pass


class InvalidParametersError(SeasonalModelError):
    pass


class MalformedMapError(SeasonalModelError):
    pass


class UndefinedRatioError(SeasonalModelError):
    pass


class IntegrationError(SeasonalModelError):
    """Raised when a state becomes non-finite or leaves the
    nonnegative quadrant during integration.
    """

    def __init__(self, message, phase=None, time=None, last_state=None):
        super().__init__(message)
        self.phase = phase
        self.time = time
        self.last_state = last_state


class ConvergenceError(SeasonalModelError):
    pass


class PeriodicOrbitNotFound(ConvergenceError):
    def __init__(self, message, previous=None, last=None, iterations=None):
        super().__init__(message)
        self.previous = previous
        self.last = last
        self.iterations = iterations
