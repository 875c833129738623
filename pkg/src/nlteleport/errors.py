"""Exception types shared across modules."""


class GridTooCoarseError(ValueError):
    """A mode is not resolved by the momentum grid (norm leaks out of the window)."""


class GridMismatchError(ValueError):
    """Two spectra live on different grids."""


class ToleranceNotMetError(RuntimeError):
    """Quadrature refinement could not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, tolerance: float):
        super().__init__(message)
        self.estimate = estimate
        self.tolerance = tolerance


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class ModeSpecSyntaxError(ValueError):
    """Malformed mode text."""
