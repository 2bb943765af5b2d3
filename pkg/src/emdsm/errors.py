"""Exception types shared across the package."""


class EmdsmError(Exception):
    """Base class for all package-specific errors."""


class DomainError(EmdsmError, ValueError):
    """Argument outside the mathematical domain of a function."""


class SingularityError(EmdsmError, ValueError):
    """Kernel evaluated at (or too close to) its singular point."""


class DimensionMismatchError(EmdsmError, ValueError):
    """Inconsistent spatial dimensions between objects."""


class GeometryError(EmdsmError, ValueError):
    """Points or domains violate a geometric precondition."""


class DegenerateGridError(EmdsmError, ValueError):
    """Requested mesh cannot resolve the target region."""


class SolverError(EmdsmError, RuntimeError):
    """Linear solve failed or did not reach the requested tolerance."""


class ConfigError(EmdsmError, ValueError):
    """Experiment configuration is malformed or inconsistent."""


class StageError(EmdsmError, RuntimeError):
    """Pipeline failure, labelled with the stage that raised it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
