"""Exception types raised across the package."""


class ParameterDomainError(ValueError):
    """A strength, angle, step count or coin lies outside its allowed domain."""


class ChannelInvariantError(ValueError):
    """A Kraus set violates completeness or its model's operator count."""


class SingularityError(ArithmeticError):
    """A closed form diverges at the requested parameters (e.g. resolvent at p=0)."""


class OracleLimitError(MemoryError):
    """Exact density evolution requested beyond the configured step limit."""

    def __init__(self, steps: int, limit: int):
        self.steps = steps
        self.limit = limit
        super().__init__(
            f"density oracle limited to t <= {limit} (requested {steps}); "
            f"raise the limit with oracle_limit={steps} / --oracle-limit {steps} "
            f"at O(t^2) memory cost"
        )


class TrajectoryError(RuntimeError):
    """Internal inconsistency during trajectory sampling."""
