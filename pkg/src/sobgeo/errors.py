"""Exception hierarchy shared by all sobgeo modules."""


class SobgeoError(Exception):
    """Base class for library errors."""


class ValidationError(SobgeoError, ValueError):
    """Input has the wrong shape, grid size, order or parameter range."""


class ImmersionError(SobgeoError):
    """A loop violates the discrete immersion floor (or a diffeo folds over)."""


class ImmersionLostError(ImmersionError):
    """Time integration left the immersion set.

    Carries the time of failure and the partial trajectory up to the last
    valid state.
    """

    def __init__(self, message, time=None, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory


class ConvergenceError(SobgeoError):
    """An iterative solve did not reach its tolerance.

    ``best`` holds the best iterate found (solver specific).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class TrustRegionError(ConvergenceError):
    """Shooting target lies outside the admissible neighbourhood."""


class BlowUpError(SobgeoError):
    """Eulerian solution exceeded the configured sup-norm bound."""
