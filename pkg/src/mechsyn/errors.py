class ConfigurationError(ValueError):
    """Invalid bounds, hyperparameters or campaign settings."""


class InfeasibleConfiguration(ValueError):
    """The linkage cannot be assembled at the requested input angle."""


class DegenerateRepair(ValueError):
    """Grashof repair produced a zero-length link or a boundary case.

    Callers resample the individual.
    """


class DegenerateTask(ValueError):
    """A task whose target coordinates span no distance."""
