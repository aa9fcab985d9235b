"""Exception types shared across the package."""


class DomainError(ValueError):
    """Invalid or non-finite input to a numerical routine."""


class ConfigError(ValueError):
    """Bad integrator, quadrature, grid, or run configuration."""


class PreconditionError(ValueError):
    """Input violates a mathematical precondition (e.g. the origin in a gradient)."""


class FormatError(ValueError):
    """Malformed field file."""


class FlowOverflowError(OverflowError):
    """Hyperbolic growth exceeded double precision.

    ``t`` is the time at which the overflow happened, ``nodes`` optionally
    lists offending grid indices as (row, column) pairs.
    """

    def __init__(self, message, t=None, nodes=None):
        super().__init__(message)
        self.t = t
        self.nodes = list(nodes) if nodes is not None else []
