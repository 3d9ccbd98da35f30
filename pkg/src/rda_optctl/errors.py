class SolverError(RuntimeError):
    """A time-marching solve aborted.  ``level`` is the offending time level."""

    def __init__(self, message, level=None, iteration=None):
        self.level = level
        self.iteration = iteration
        super().__init__(message)


class StabilityError(SolverError):
    pass


class NonFiniteError(SolverError):
    pass


class NegativeDensityError(SolverError):
    pass


class ScenarioError(ValueError):
    """Invalid scenario document or parameters; ``location`` names the key path."""

    def __init__(self, message, location=""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class ClampingError(ValueError):
    pass
