"""Exception types shared across the package."""


class CoverageError(RuntimeError):
    """Angular (or bin) coverage is insufficient for the requested operation."""


class DivergenceError(RuntimeError):
    """An iterative scheme failed to converge."""


class NearRadialError(RuntimeError):
    """Data carries no usable angular asymmetry for attenuation identification."""
