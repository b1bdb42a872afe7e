"""Exception types raised by qkcurv."""


class DimensionError(ValueError):
    """Operands live on spaces of different dimension, or a shape is wrong."""


class DegeneratePlaneError(ValueError):
    """Two vectors that were supposed to span a 2-plane are (numerically) collinear."""


class EigenSolverError(RuntimeError):
    """The symmetric eigensolver failed to converge."""


class ModelError(ValueError):
    """A model was requested with illegal parameters or failed a structural self-check."""


class ConfigError(ValueError):
    """A run configuration is incomplete or out of range."""
