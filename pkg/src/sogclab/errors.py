"""Exception types shared across the package."""


class NumericError(RuntimeError):
    """An iterative numerical procedure failed to converge or lost accuracy."""


class GenerationError(RuntimeError):
    """Random data generation exhausted its resampling budget."""
